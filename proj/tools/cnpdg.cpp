#include "cnp/app/runs.hpp"
#include "cnp/parallel.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

enum ExitCode { Ok = 0, Internal = 1, BadConfig = 2, SolverFailed = 3, IoFailed = 4 };

void print_mms(const cnp::app::MmsResult& r)
{
    std::printf("%5s %9s %10s %12s %12s %8s %8s %7s\n", "level", "elements", "dofs", "err_phi", "err_c1", "rate_phi",
                "rate_c1", "newton");
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& row = r.rows[i];
        std::printf("%5d %9zu %10zu %12.4e %12.4e %8.3f %8.3f %7d\n", row.level, row.elements, row.dofs, row.error_phi,
                    row.error_c1, row.rate_phi, row.rate_c1, r.reports[i].iterations());
    }
}

void print_reactor(const cnp::app::ReactorResult& r)
{
    r.report.write_summary(std::cout);
    std::printf("elements           : %zu (%zu dofs)\n", r.elements, r.dofs);
    std::printf("anode current (A)  : %.10e\n", r.currents.anode);
    std::printf("cathode current (A): %.10e\n", r.currents.cathode);
    std::printf("current balance    : %.3e\n", r.current_balance);
    std::printf("inlet recovered (M): %.12f (interior trace %.12f)\n", r.eliminated_inlet, r.eliminated_inlet_interior);
    for (const auto& w : r.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
}

void print_solvecheck(const std::vector<cnp::app::SolvecheckRow>& rows)
{
    std::printf("%5s %9s %5s %5s %6s", "level", "elements", "pc", "nsub", "outer");
    if (!rows.empty())
        for (const auto& b : rows.front().blocks)
            std::printf(" %12s", ("inner " + b.label).c_str());
    std::printf("\n");
    for (const auto& r : rows) {
        std::printf("%5d %9zu %5s %5d %6d", r.level, r.elements, r.concentration_pc == cnp::linalg::PcType::Gmg ? "mg" : "asm",
                    r.subdomains, r.outer_iterations);
        for (const auto& b : r.blocks)
            std::printf(" %12.2f", b.mean_iterations());
        std::printf("\n");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"DG solver for electroneutral multi-ion transport"};
    app.require_subcommand(1, 1);
    std::string config, out;
    int threads = 1;
    bool det = false;
    for (const char* name : {"mms", "reactor", "solvecheck"}) {
        auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
        sub->add_option("--config", config, "JSON configuration file")->required();
        sub->add_option("--out", out, "output directory")->required();
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--deterministic", det, "fixed reduction order and zeroed wall times in CSV output");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Ok : BadConfig;
    }

    cnp::set_num_threads(threads);
    cnp::set_deterministic(det);
    try {
        const auto kind = cnp::app::experiment_from_string(app.get_subcommands().front()->get_name());
        const auto cfg = cnp::app::load_config(config, kind);
        switch (kind) {
        case cnp::app::Experiment::Mms:
            print_mms(cnp::app::run_mms(cfg, out));
            break;
        case cnp::app::Experiment::Reactor:
            print_reactor(cnp::app::run_reactor(cfg, out));
            break;
        case cnp::app::Experiment::Solvecheck:
            print_solvecheck(cnp::app::run_solvecheck(cfg, out));
            break;
        }
    } catch (const cnp::app::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return BadConfig;
    } catch (const cnp::app::SolveFailure& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return SolverFailed;
    } catch (const cnp::app::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return IoFailed;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return Internal;
    }
    return Ok;
}
