#include "cnp/app/config.hpp"

#include "cnp/parallel.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace cnp::app {

using json = nlohmann::json;

std::string to_string(Experiment e)
{
    switch (e) {
    case Experiment::Mms:
        return "mms";
    case Experiment::Reactor:
        return "reactor";
    case Experiment::Solvecheck:
        return "solvecheck";
    }
    return "?";
}

Experiment experiment_from_string(const std::string& s)
{
    for (auto e : {Experiment::Mms, Experiment::Reactor, Experiment::Solvecheck})
        if (to_string(e) == s)
            return e;
    throw ConfigError("unknown experiment '" + s + "'");
}

namespace {

// Object reader that remembers which keys were consumed so the rest can be rejected.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError(path_ + ": expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    std::optional<Node> child(const std::string& key)
    {
        if (!mark(key))
            return std::nullopt;
        return Node(j_.at(key), sub(key));
    }

    template <class T>
    void get(const std::string& key, T& out)
    {
        if (!mark(key))
            return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(sub(key) + ": wrong type");
        }
    }

    void number(const std::string& key, double& out, double lo, double hi, bool open_lo = false)
    {
        if (!mark(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_number())
            throw ConfigError(sub(key) + ": expected a number");
        const double x = v.get<double>();
        if (!(open_lo ? x > lo : x >= lo) || !(x <= hi))
            throw ConfigError(sub(key) + ": value out of range");
        out = x;
    }

    void integer(const std::string& key, int& out, int lo, int hi)
    {
        if (!mark(key))
            return;
        const auto& v = j_.at(key);
        if (!v.is_number_integer())
            throw ConfigError(sub(key) + ": expected an integer");
        const auto x = v.get<long long>();
        if (x < lo || x > hi)
            throw ConfigError(sub(key) + ": value out of range");
        out = static_cast<int>(x);
    }

    const json& raw(const std::string& key)
    {
        mark(key);
        return j_.at(key);
    }

    std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    /// Rejects every key that was not read.
    void done() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key()))
                throw ConfigError("unknown key '" + sub(it.key()) + "'");
    }

private:
    bool mark(const std::string& key)
    {
        if (!j_.contains(key))
            return false;
        used_.insert(key);
        return true;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

constexpr double kInf = std::numeric_limits<double>::infinity();

linalg::KrylovMethod parse_ksp(const std::string& s, const std::string& where)
{
    try {
        return linalg::krylov_method_from_string(s);
    } catch (const Error&) {
        throw ConfigError(where + ": unknown ksp_type '" + s + "'");
    }
}

linalg::PcType parse_pc(const std::string& s, const std::string& where)
{
    if (s == "mg")
        return linalg::PcType::Gmg;
    if (s == "hypre")
        throw ConfigError(where + ": algebraic multigrid is not available, use \"mg\"");
    try {
        return linalg::pc_type_from_string(s);
    } catch (const Error&) {
        throw ConfigError(where + ": unknown pc_type '" + s + "'");
    }
}

void parse_block(Node& n, linalg::BlockSolverConfig& b)
{
    std::string s;
    if (n.has("ksp_type")) {
        n.get("ksp_type", s);
        if (s == "preonly") {
            b.preonly = true;
        } else {
            b.preonly = false;
            b.krylov.method = parse_ksp(s, n.sub("ksp_type"));
        }
    }
    n.number("ksp_rtol", b.krylov.rtol, 0.0, 1.0, true);
    n.number("ksp_atol", b.krylov.atol, 0.0, kInf);
    n.integer("ksp_max_it", b.krylov.max_iters, 1, 1000000);
    n.integer("ksp_gmres_restart", b.krylov.restart, 1, 10000);
    if (n.has("pc_type")) {
        n.get("pc_type", s);
        b.pc = parse_pc(s, n.sub("pc_type"));
    }
    if (n.has("sub_pc_type")) {
        n.get("sub_pc_type", s);
        if (s != "ilu")
            throw ConfigError(n.sub("sub_pc_type") + ": only \"ilu\" subdomain solves are supported");
    }
    n.integer("pc_asm_blocks", b.asm_subdomains, 1, 1 << 20);
    n.integer("pc_asm_overlap", b.asm_overlap, 0, 16);
    if (n.has("mg_levels_ksp_type")) {
        n.get("mg_levels_ksp_type", s);
        if (s != "richardson")
            throw ConfigError(n.sub("mg_levels_ksp_type") + ": only \"richardson\" smoothing is supported");
    }
    n.integer("mg_levels_ksp_max_it", b.gmg.smoothing_steps, 1, 100);
    n.number("mg_levels_ksp_richardson_scale", b.gmg.damping, 0.0, 2.0, true);
    if (n.has("mg_levels_pc_type")) {
        n.get("mg_levels_pc_type", s);
        if (s != "asm")
            throw ConfigError(n.sub("mg_levels_pc_type") + ": only \"asm\" level smoothers are supported");
    }
    if (n.has("mg_levels_sub_pc_type")) {
        n.get("mg_levels_sub_pc_type", s);
        if (s != "ilu")
            throw ConfigError(n.sub("mg_levels_sub_pc_type") + ": only \"ilu\" subdomain solves are supported");
    }
    n.integer("mg_levels_pc_asm_blocks", b.gmg.asm_subdomains, 1, 1 << 20);
    n.integer("mg_levels_pc_asm_overlap", b.gmg.asm_overlap, 0, 16);
    if (n.has("mg_coarse_pc_type")) {
        n.get("mg_coarse_pc_type", s);
        if (s != "lu")
            throw ConfigError(n.sub("mg_coarse_pc_type") + ": only \"lu\" coarse solves are supported");
    }
}

void parse_solver(Node& n, RunConfig& c)
{
    std::string s;
    if (n.has("snes_type")) {
        n.get("snes_type", s);
        if (s != "newton")
            throw ConfigError(n.sub("snes_type") + ": only \"newton\" is supported");
    }
    n.number("snes_rtol", c.newton.rtol, 0.0, 1.0, true);
    n.number("snes_atol", c.newton.atol, 0.0, kInf);
    n.integer("snes_max_it", c.newton.max_iters, 1, 10000);
    n.number("snes_linesearch_alpha", c.newton.ls_c, 0.0, 1.0, true);
    n.number("snes_linesearch_ratio", c.newton.ls_ratio, 0.0, 1.0, true);
    n.integer("snes_linesearch_max_it", c.newton.ls_max, 0, 1000);
    if (n.has("ksp_type")) {
        n.get("ksp_type", s);
        c.linear.outer.method = parse_ksp(s, n.sub("ksp_type"));
    }
    n.number("ksp_rtol", c.linear.outer.rtol, 0.0, 1.0, true);
    n.number("ksp_atol", c.linear.outer.atol, 0.0, kInf);
    n.integer("ksp_max_it", c.linear.outer.max_iters, 1, 1000000);
    n.integer("ksp_gmres_restart", c.linear.outer.restart, 1, 10000);
    if (n.has("pc_type")) {
        n.get("pc_type", s);
        if (s != "fieldsplit")
            throw ConfigError(n.sub("pc_type") + ": only \"fieldsplit\" is supported");
    }
    if (auto b = n.child("fieldsplit_0")) {
        parse_block(*b, c.linear.potential);
        b->done();
    }
    if (auto b = n.child("fieldsplit_k")) {
        parse_block(*b, c.linear.concentration);
        b->done();
    }
}

std::array<int, 3> parse_cells(const json& j, const std::string& where, int dim)
{
    if (!j.is_array() || static_cast<int>(j.size()) != dim)
        throw ConfigError(where + ": expected " + std::to_string(dim) + " element counts");
    std::array<int, 3> n{1, 1, 1};
    for (int d = 0; d < dim; ++d) {
        if (!j[d].is_number_integer() || j[d].get<long long>() < 1 || j[d].get<long long>() > (1 << 16))
            throw ConfigError(where + ": element counts must be positive integers");
        n[d] = j[d].get<int>();
    }
    return n;
}

void parse_ions(Node& n, physics::IonSystem& ions)
{
    if (n.has("preset")) {
        std::string s;
        n.get("preset", s);
        if (s != "bortels-cuso4")
            throw ConfigError(n.sub("preset") + ": unknown preset '" + s + "'");
        if (n.has("species"))
            throw ConfigError(n.sub("species") + ": give either a preset or a species table");
        ions = physics::bortels_cuso4();
    }
    if (n.has("species")) {
        const auto& arr = n.raw("species");
        if (!arr.is_array())
            throw ConfigError(n.sub("species") + ": expected an array");
        ions.species.clear();
        ions.eliminated_index = -1;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Node sp(arr[i], n.sub("species[" + std::to_string(i) + "]"));
            physics::Species s;
            sp.get("name", s.name);
            sp.integer("z", s.z, -10, 10);
            sp.number("D", s.D, 0.0, kInf, true);
            sp.number("c_in", s.c_in, 0.0, kInf);
            if (s.name.empty())
                throw ConfigError(sp.sub("name") + ": species need a name");
            sp.done();
            ions.species.push_back(s);
        }
    }
    n.number("T", ions.T, 0.0, kInf, true);
    if (n.has("eliminated")) {
        std::string s;
        n.get("eliminated", s);
        try {
            ions.eliminated_index = ions.index_of(s);
        } catch (const Error&) {
            throw ConfigError(n.sub("eliminated") + ": no species named '" + s + "'");
        }
    }
    const auto v = physics::validate_system(ions);
    if (!v.ok())
        throw ConfigError(n.sub("species") + ": " + v.message);
}

void parse_reactor(Node& n, ReactorSetup& r)
{
    n.number("inlet_length", r.channel.L_a, 0.0, kInf, true);
    n.number("electrode_length", r.channel.L, 0.0, kInf, true);
    n.number("outlet_length", r.channel.L_b, 0.0, kInf, true);
    n.number("height", r.channel.h, 0.0, kInf, true);
    n.number("width", r.channel.w, 0.0, kInf, true);
    n.number("length_scale", r.length, 0.0, kInf, true);
    n.number("u_avg", r.u_avg, 0.0, kInf, true);
    if (n.has("c_ref")) {
        double c = 0.0;
        n.number("c_ref", c, 0.0, kInf, true);
        r.c_ref = c;
    }
}

void parse_kinetics(Node& n, ReactorSetup& r)
{
    auto& k = r.kinetics;
    n.number("J0_avg", k.J0_avg, 0.0, kInf);
    bool profile = true;
    n.get("profile", profile);
    r.exchange_profile = profile;
    n.number("c_o_star", k.c_o_star, 0.0, kInf, true);
    n.number("c_r_star", k.c_r_star, 0.0, kInf, true);
    n.number("gamma", k.gamma, 0.0, kInf, true);
    n.number("alpha_1", k.alpha1, 0.0, 1.0, true);
    n.number("alpha_2", k.alpha2, 0.0, 1.0, true);
    n.integer("n", k.n, 1, 16);
    n.get("oxidant", r.oxidant);
    if (n.has("reductant")) {
        std::string s;
        n.get("reductant", s);
        r.reductant = s;
    }
    if (auto p = n.child("phi_app")) {
        p->number("anode", k.phi_app[mesh::BoundaryTag::ElectrodeAnode], -kInf, kInf);
        p->number("cathode", k.phi_app[mesh::BoundaryTag::ElectrodeCathode], -kInf, kInf);
        p->done();
    }
}

void parse_channel_mesh(Node& n, ReactorOptions& r)
{
    if (n.has("cells")) {
        const auto c = parse_cells(n.raw("cells"), n.sub("cells"), 3);
        r.setup.channel.nx = c[0];
        r.setup.channel.ny = c[1];
        r.setup.channel.nz = c[2];
    }
    n.number("grading", r.setup.channel.grading_strength, 0.0, 20.0);
    if (n.has("x_segments")) {
        const auto c = parse_cells(n.raw("x_segments"), n.sub("x_segments"), 3);
        r.setup.channel.x_segments = c;
    }
    n.integer("levels", r.hierarchy_levels, 1, 12);
    n.integer("refinements", r.refinements, 0, 3);
}

} // namespace

void RunConfig::check() const
{
    if (order < 1 || order > 3)
        throw ConfigError("order must be 1, 2 or 3");
    try {
        newton.check();
        linear.outer.check();
        linear.potential.krylov.check();
        linear.concentration.krylov.check();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("solver: ") + e.what());
    }
    if (experiment == Experiment::Mms) {
        if (mms.dim != 2 && mms.dim != 3)
            throw ConfigError("mesh.dim must be 2 or 3");
        if (mms.levels < 1)
            throw ConfigError("mesh.levels must be >= 1");
    } else {
        const auto& ch = reactor.setup.channel;
        if (ch.nx < 1 || ch.ny < 1 || ch.nz < 1)
            throw ConfigError("mesh.cells must be positive");
        if (experiment == Experiment::Solvecheck) {
            if (solvecheck.levels < 1 || solvecheck.levels > reactor.hierarchy_levels + reactor.refinements)
                throw ConfigError("solvecheck.levels must lie between 1 and the number of mesh levels");
            if (solvecheck.preconditioners.empty() || solvecheck.asm_subdomains.empty())
                throw ConfigError("solvecheck needs at least one preconditioner and one subdomain count");
        }
    }
}

RunConfig default_config(Experiment e)
{
    RunConfig c;
    c.experiment = e;
    const int t = num_threads();
    c.linear.concentration.asm_subdomains = t;
    if (e == Experiment::Mms) {
        // the rate study measures discretization error, so the algebraic error is driven far below it
        c.newton.rtol = 1e-10;
    }
    return c;
}

RunConfig parse_config(const std::string& text, std::optional<Experiment> experiment)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    std::optional<Experiment> declared;
    if (doc.is_object() && doc.contains("experiment")) {
        if (!doc["experiment"].is_string())
            throw ConfigError("experiment: expected a string");
        declared = experiment_from_string(doc["experiment"].get<std::string>());
    }
    if (experiment && declared && *experiment != *declared)
        throw ConfigError("config declares experiment '" + to_string(*declared) + "' but '" + to_string(*experiment) +
                          "' was requested");
    const Experiment kind = experiment ? *experiment : declared.value_or(Experiment::Mms);
    RunConfig c = default_config(kind);
    {
        Node root(doc, "");
        if (root.has("experiment")) {
            std::string s;
            root.get("experiment", s);
        }
        root.integer("order", c.order, 1, 3);
        if (auto n = root.child("dg")) {
            n->number("penalty", c.dg.eta, 0.0, kInf, true);
            n->done();
        }
        if (auto n = root.child("mesh")) {
            if (kind == Experiment::Mms) {
                n->integer("dim", c.mms.dim, 2, 3);
                if (c.mms.dim == 2)
                    c.mms.cells[2] = 1;
                if (n->has("cells"))
                    c.mms.cells = parse_cells(n->raw("cells"), n->sub("cells"), c.mms.dim);
                n->integer("levels", c.mms.levels, 1, 12);
            } else {
                parse_channel_mesh(*n, c.reactor);
            }
            n->done();
        }
        if (auto n = root.child("mms")) {
            if (kind != Experiment::Mms)
                throw ConfigError("mms: section only valid for the mms experiment");
            std::string s = "default";
            n->get("initial_guess", s);
            if (s != "default" && s != "exact")
                throw ConfigError("mms.initial_guess: expected \"default\" or \"exact\"");
            c.mms.exact_initial_guess = s == "exact";
            n->done();
        }
        const bool reactor_like = kind != Experiment::Mms;
        for (const char* sec : {"ions", "reactor", "kinetics", "solvecheck"})
            if (root.has(sec) && !reactor_like)
                throw ConfigError(std::string(sec) + ": section not valid for the mms experiment");
        if (auto n = root.child("ions")) {
            parse_ions(*n, c.reactor.setup.ions);
            n->done();
        }
        if (auto n = root.child("reactor")) {
            parse_reactor(*n, c.reactor.setup);
            n->done();
        }
        if (auto n = root.child("kinetics")) {
            parse_kinetics(*n, c.reactor.setup);
            n->done();
        }
        if (auto n = root.child("solvecheck")) {
            if (kind != Experiment::Solvecheck)
                throw ConfigError("solvecheck: section only valid for the solvecheck experiment");
            n->integer("levels", c.solvecheck.levels, 1, 12);
            if (n->has("preconditioners")) {
                const auto& arr = n->raw("preconditioners");
                if (!arr.is_array())
                    throw ConfigError("solvecheck.preconditioners: expected an array");
                c.solvecheck.preconditioners.clear();
                for (const auto& v : arr) {
                    if (!v.is_string())
                        throw ConfigError("solvecheck.preconditioners: expected strings");
                    const auto pc = parse_pc(v.get<std::string>(), "solvecheck.preconditioners");
                    if (pc != linalg::PcType::Asm && pc != linalg::PcType::Gmg)
                        throw ConfigError("solvecheck.preconditioners: only \"asm\" and \"mg\" are compared");
                    c.solvecheck.preconditioners.push_back(pc);
                }
            }
            if (n->has("asm_subdomains")) {
                const auto& arr = n->raw("asm_subdomains");
                if (!arr.is_array())
                    throw ConfigError("solvecheck.asm_subdomains: expected an array");
                c.solvecheck.asm_subdomains.clear();
                for (const auto& v : arr) {
                    if (!v.is_number_integer() || v.get<long long>() < 1)
                        throw ConfigError("solvecheck.asm_subdomains: expected positive integers");
                    c.solvecheck.asm_subdomains.push_back(v.get<int>());
                }
            }
            n->done();
        }
        if (auto n = root.child("solver")) {
            parse_solver(*n, c);
            n->done();
        }
        if (auto n = root.child("output")) {
            n->get("vtk", c.write_vtk);
            n->done();
        }
        root.done();
    }
    c.check();
    return c;
}

RunConfig load_config(const std::filesystem::path& path, std::optional<Experiment> experiment)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), experiment);
}

} // namespace cnp::app
