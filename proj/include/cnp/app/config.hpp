#pragma once

#include "cnp/app/problems.hpp"
#include "cnp/assembly.hpp"
#include "cnp/nonlinear.hpp"

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cnp::app {

enum class Experiment { Mms, Reactor, Solvecheck };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

class ConfigError : public Error {
public:
    using Error::Error;
};

struct MmsOptions {
    int dim = 3;
    std::array<int, 3> cells{4, 4, 4}; // coarsest level
    int levels = 4;
    bool exact_initial_guess = false;
};

struct ReactorOptions {
    ReactorSetup setup;
    int hierarchy_levels = 4; // GMG levels below and including the base mesh
    int refinements = 0;      // uniform refinements of the base mesh
};

struct SolvecheckOptions {
    int levels = 3; // finest hierarchy levels to evaluate
    std::vector<linalg::PcType> preconditioners{linalg::PcType::Asm, linalg::PcType::Gmg};
    std::vector<int> asm_subdomains{4};
};

struct RunConfig {
    Experiment experiment = Experiment::Mms;
    int order = 1;
    assembly::DgParams dg;
    nonlinear::NewtonConfig newton;
    nonlinear::LinearSolverConfig linear;
    MmsOptions mms;
    ReactorOptions reactor;
    SolvecheckOptions solvecheck;
    bool write_vtk = true;

    void check() const;
};

/// Defaults for an experiment before any user key is applied.
RunConfig default_config(Experiment e);

/// Parses a JSON document. Unknown keys and out-of-range values throw ConfigError.
/// `experiment`, when given, must match the document's own "experiment" key if present.
RunConfig parse_config(const std::string& text, std::optional<Experiment> experiment = {});
RunConfig load_config(const std::filesystem::path& path, std::optional<Experiment> experiment = {});

} // namespace cnp::app
