#include "cnp/app/problems.hpp"

namespace cnp::app {

assembly::CnpProblem make_mms_problem(std::shared_ptr<const fe::FeSpace> space)
{
    const auto mc = physics::mms_case();
    assembly::CnpProblem pb;
    pb.space = std::move(space);
    pb.system = mc.system;
    pb.velocity = mc.velocity;
    pb.reaction = {mc.species_forcing, {}};
    pb.charge_source = mc.charge_forcing;
    pb.phi_exterior = mc.phi_exact;
    pb.c_exterior = {mc.c1_exact};
    return pb;
}

physics::ButlerVolmerParams ReactorSetup::default_kinetics()
{
    physics::ButlerVolmerParams p;
    p.J0_avg = 30.0;
    p.width = 0.06;
    p.c_o_star = 10.0;
    p.gamma = 1.0;
    p.alpha1 = p.alpha2 = 0.5;
    p.n = 2;
    p.T = 298.15;
    p.phi_app = {{mesh::BoundaryTag::ElectrodeAnode, 0.0}, {mesh::BoundaryTag::ElectrodeCathode, 0.03}};
    return p;
}

mesh::ChannelSpec ReactorSetup::scaled_channel() const
{
    mesh::ChannelSpec s = channel;
    s.scale = 1.0 / length;
    return s;
}

physics::NondimSystem ReactorSetup::nondim() const { return physics::nondimensionalize(ions, length, u_avg, c_ref); }

mesh::Mesh make_reactor_mesh(const ReactorSetup& setup) { return mesh::build_channel_mesh(setup.scaled_channel()); }

assembly::CnpProblem make_reactor_problem(std::shared_ptr<const fe::FeSpace> space, const ReactorSetup& setup)
{
    assembly::CnpProblem pb;
    pb.space = std::move(space);
    pb.system = setup.nondim();
    pb.velocity = physics::parabolic_velocity(setup.channel.h / setup.length, 1.0);
    pb.kinetics = setup.kinetics;
    pb.kinetics->oxidant = setup.ions.index_of(setup.oxidant);
    pb.kinetics->reductant = setup.reductant ? setup.ions.index_of(*setup.reductant) : -1;
    if (setup.exchange_profile)
        pb.kinetics->width = setup.channel.w;
    else
        pb.kinetics->width.reset();
    pb.kinetics->T = setup.ions.T;
    return pb;
}

} // namespace cnp::app
