#pragma once

#include "cnp/assembly.hpp"
#include "cnp/mesh.hpp"
#include "cnp/physics.hpp"

#include <memory>
#include <optional>

namespace cnp::app {

/// Manufactured problem on a unit-box space with all faces tagged Exterior.
assembly::CnpProblem make_mms_problem(std::shared_ptr<const fe::FeSpace> space);

/// Parallel-plate reactor in SI units; the solver works on lengths scaled by `length`.
struct ReactorSetup {
    physics::IonSystem ions = physics::bortels_cuso4();
    mesh::ChannelSpec channel;
    double length = 0.01; // m
    double u_avg = 0.03;  // m/s
    std::optional<double> c_ref;
    physics::ButlerVolmerParams kinetics = default_kinetics();
    std::string oxidant = "Cu2+";
    std::optional<std::string> reductant; // solid reductant with unit activity when empty
    bool exchange_profile = true;         // J0 varies across the electrode width

    static physics::ButlerVolmerParams default_kinetics();
    /// Channel spec with coordinates scaled to nondimensional lengths.
    mesh::ChannelSpec scaled_channel() const;
    physics::NondimSystem nondim() const;
};

mesh::Mesh make_reactor_mesh(const ReactorSetup& setup);
assembly::CnpProblem make_reactor_problem(std::shared_ptr<const fe::FeSpace> space, const ReactorSetup& setup);

} // namespace cnp::app
