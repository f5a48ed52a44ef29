#include "pxspk/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace pxspk
{

using nlohmann::json;

std::string fnv1a_hex(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes)
    {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace
{

[[noreturn]] void schema_fail(const std::string& where, const std::string& what)
{
    throw Error(ErrorCode::SchemaError, where + ": " + what);
}

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys)
{
    if (!obj.is_object())
        schema_fail(where, "expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            schema_fail(where, "unknown key '" + it.key() + "'");
}

const json& need(const json& obj, const std::string& where, const char* key)
{
    if (!obj.contains(key))
        schema_fail(where, std::string("missing key '") + key + "'");
    return obj.at(key);
}

Real number(const json& v, const std::string& where)
{
    if (!v.is_number())
        schema_fail(where, "expected a number");
    const Real x = v.get<Real>();
    if (!std::isfinite(x))
        schema_fail(where, "expected a finite number");
    return x;
}

Real number_or(const json& obj, const std::string& where, const char* key, Real fallback)
{
    return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

Index integer(const json& v, const std::string& where, Index lo)
{
    if (!v.is_number_integer())
        schema_fail(where, "expected an integer");
    const auto x = v.get<std::int64_t>();
    if (x < lo)
        schema_fail(where, "must be at least " + std::to_string(lo));
    return Index(x);
}

VectorXr point(const json& v, const std::string& where, int d)
{
    if (!v.is_array() || int(v.size()) != d)
        schema_fail(where, "expected an array of " + std::to_string(d) + " numbers");
    VectorXr p(d);
    for (int i = 0; i < d; ++i)
        p(i) = number(v[std::size_t(i)], where);
    return p;
}

std::string text(const json& v, const std::string& where)
{
    if (!v.is_string())
        schema_fail(where, "expected a string");
    return v.get<std::string>();
}

MediumSpec parse_medium(const json& m)
{
    allow_keys(m, "medium", {"family", "sigma_c", "ell_z", "ell_x", "d"});
    if (m.contains("family") && text(m.at("family"), "medium.family") != "gaussian")
        schema_fail("medium.family", "only 'gaussian' is supported");
    const Real sigma = number(need(m, "medium", "sigma_c"), "medium.sigma_c");
    const Real lz = number(need(m, "medium", "ell_z"), "medium.ell_z");
    const Real lx = number(need(m, "medium", "ell_x"), "medium.ell_x");
    const int d = int(integer(need(m, "medium", "d"), "medium.d", 1));
    if (d != 1 && d != 2)
        schema_fail("medium.d", "must be 1 or 2");
    if (lz <= 0.0)
        schema_fail("medium.ell_z", "must be positive");
    if (lx <= 0.0)
        schema_fail("medium.ell_x", "must be positive");
    if (sigma < 0.0)
        schema_fail("medium.sigma_c", "must be nonnegative");
    return sigma == 0.0 ? MediumSpec::vacuum(d, lz, lx) : MediumSpec::gaussian(sigma, lz, lx, d);
}

ScalingRegime parse_regime(const json& r, std::optional<PhysicalScenario>& physical)
{
    allow_keys(r, "regime", {"kind", "theta", "epsilon", "eta", "beta", "gamma", "physical"});
    const Real beta = number_or(r, "regime", "beta", 1.0);
    const Real gamma = number_or(r, "regime", "gamma", 1.0);
    if (r.contains("physical"))
    {
        const json& p = r.at("physical");
        allow_keys(p, "regime.physical", {"k0", "l0", "w0", "Z", "sigma"});
        PhysicalScenario s;
        s.k0 = number(need(p, "regime.physical", "k0"), "regime.physical.k0");
        s.l0 = number(need(p, "regime.physical", "l0"), "regime.physical.l0");
        s.w0 = number(need(p, "regime.physical", "w0"), "regime.physical.w0");
        s.Z = number(need(p, "regime.physical", "Z"), "regime.physical.Z");
        s.sigma = number(need(p, "regime.physical", "sigma"), "regime.physical.sigma");
        physical = s;
        const auto dl = physical_to_dimensionless(s);
        return custom_regime(dl.theta, dl.epsilon, dl.eta, beta, gamma);
    }
    const std::string kind = r.contains("kind") ? text(r.at("kind"), "regime.kind") : "custom";
    const RegimeKind k = regime_kind_from_string(kind);
    const Real theta = number(need(r, "regime", "theta"), "regime.theta");
    if (k == RegimeKind::Custom)
    {
        const Real eps = number(need(r, "regime", "epsilon"), "regime.epsilon");
        const Real eta = number(need(r, "regime", "eta"), "regime.eta");
        return custom_regime(theta, eps, eta, beta, gamma);
    }
    if (r.contains("epsilon") || r.contains("eta"))
        schema_fail("regime", "epsilon and eta are derived for kinetic and diffusive kinds");
    return regime_from_theta(theta, gamma, k, beta);
}

SourceSpec parse_source(const json& s)
{
    allow_keys(s, "source", {"profile", "width", "amplitude"});
    if (s.contains("profile") && text(s.at("profile"), "source.profile") != "gaussian")
        schema_fail("source.profile", "only 'gaussian' sources can be configured");
    const Real w = number(need(s, "source", "width"), "source.width");
    if (w <= 0.0)
        schema_fail("source.width", "must be positive");
    Complex amp = 1.0;
    if (s.contains("amplitude"))
    {
        const json& a = s.at("amplitude");
        if (a.is_array())
        {
            if (a.size() != 2)
                schema_fail("source.amplitude", "expected [re, im]");
            amp = {number(a[0], "source.amplitude"), number(a[1], "source.amplitude")};
        }
        else
        {
            amp = number(a, "source.amplitude");
        }
    }
    return SourceSpec::gaussian(w, amp);
}

Probe parse_probe(const json& p, const std::string& where, int d)
{
    allow_keys(p, where, {"r", "x"});
    Probe probe;
    probe.r = point(need(p, where, "r"), where + ".r", d);
    const json& xs = need(p, where, "x");
    if (!xs.is_array() || xs.empty())
        schema_fail(where + ".x", "expected a nonempty array of points");
    probe.X.resize(d, Index(xs.size()));
    for (std::size_t j = 0; j < xs.size(); ++j)
        probe.X.col(Index(j)) = point(xs[j], where + ".x", d);
    return probe;
}

std::vector<Real> number_list(const json& v, const std::string& where)
{
    if (!v.is_array())
        schema_fail(where, "expected an array of numbers");
    std::vector<Real> out;
    for (const auto& e : v)
        out.push_back(number(e, where));
    return out;
}

} // namespace

std::vector<Probe> pair_probes(const CompareSection& compare)
{
    std::vector<Probe> out;
    for (const auto& pr : compare.pairs)
    {
        Probe p;
        p.r = compare.r;
        p.X.resize(pr.x.size(), 2);
        p.X.col(0) = pr.x;
        p.X.col(1) = pr.y;
        out.push_back(std::move(p));
    }
    return out;
}

ExperimentConfig parse_config(const json& doc)
{
    try
    {
        allow_keys(doc, "config", {"medium", "regime", "grid", "source", "ensemble", "compare", "outputs"});
        ExperimentConfig cfg;
        cfg.medium = parse_medium(need(doc, "config", "medium"));
        const int d = cfg.medium.d();
        cfg.regime = parse_regime(need(doc, "config", "regime"), cfg.physical);

        const json& g = need(doc, "config", "grid");
        allow_keys(g, "grid", {"n", "length", "dz"});
        const Index n = integer(need(g, "grid", "n"), "grid.n", 8);
        if ((n & (n - 1)) != 0)
            schema_fail("grid.n", "must be a power of two");
        const Real length = number(need(g, "grid", "length"), "grid.length");
        const Real dz = number(need(g, "grid", "dz"), "grid.dz");
        if (length <= 0.0 || dz <= 0.0)
            schema_fail("grid", "length and dz must be positive");
        cfg.grid = Grid(d, int(n), length, dz);

        cfg.source = parse_source(need(doc, "config", "source"));

        const json& e = need(doc, "config", "ensemble");
        allow_keys(e, "ensemble",
                   {"n_realizations", "seed", "solver", "splitting", "checkpoints", "probes", "margin", "shards"});
        cfg.ensemble.n_realizations = integer(need(e, "ensemble", "n_realizations"), "ensemble.n_realizations", 1);
        if (e.contains("seed"))
        {
            if (!e.at("seed").is_number_unsigned() && !e.at("seed").is_number_integer())
                schema_fail("ensemble.seed", "expected an unsigned integer");
            cfg.ensemble.seed = e.at("seed").get<std::uint64_t>();
        }
        if (e.contains("solver"))
        {
            const std::string s = text(e.at("solver"), "ensemble.solver");
            if (s != "ito" && s != "paraxial")
                schema_fail("ensemble.solver", "must be 'ito' or 'paraxial'");
            cfg.ensemble.solver = solver_kind_from_string(s);
        }
        if (e.contains("splitting"))
        {
            const std::string s = text(e.at("splitting"), "ensemble.splitting");
            if (s == "strang")
                cfg.ensemble.splitting = Splitting::Strang;
            else if (s == "lie")
                cfg.ensemble.splitting = Splitting::Lie;
            else
                schema_fail("ensemble.splitting", "must be 'strang' or 'lie'");
        }
        cfg.ensemble.checkpoints = number_list(need(e, "ensemble", "checkpoints"), "ensemble.checkpoints");
        if (cfg.ensemble.checkpoints.empty())
            schema_fail("ensemble.checkpoints", "must not be empty");
        for (Real z : cfg.ensemble.checkpoints)
            if (z < 0.0)
                schema_fail("ensemble.checkpoints", "must be nonnegative");
        const json& probes = need(e, "ensemble", "probes");
        if (!probes.is_array() || probes.empty())
            schema_fail("ensemble.probes", "expected a nonempty array");
        for (std::size_t i = 0; i < probes.size(); ++i)
            cfg.ensemble.probes.push_back(parse_probe(probes[i], "ensemble.probes[" + std::to_string(i) + "]", d));
        cfg.ensemble.margin = number_or(e, "ensemble", "margin", 0.0);
        cfg.shards = e.contains("shards") ? integer(e.at("shards"), "ensemble.shards", 1) : 1;
        if (cfg.shards > cfg.ensemble.n_realizations)
            schema_fail("ensemble.shards", "cannot exceed n_realizations");

        if (doc.contains("compare"))
        {
            const json& c = doc.at("compare");
            allow_keys(c, "compare", {"r", "pairs", "theta_sweep", "z", "paraxial_dz"});
            CompareSection cs;
            cs.r = point(need(c, "compare", "r"), "compare.r", d);
            cs.z = number_or(c, "compare", "z", 1.0);
            if (cs.z <= 0.0)
                schema_fail("compare.z", "must be positive");
            if (c.contains("paraxial_dz"))
            {
                cs.paraxial_dz = number(c.at("paraxial_dz"), "compare.paraxial_dz");
                if (!(*cs.paraxial_dz > 0.0))
                    schema_fail("compare.paraxial_dz", "must be positive");
            }
            const json& pairs = need(c, "compare", "pairs");
            if (!pairs.is_array() || pairs.empty())
                schema_fail("compare.pairs", "expected a nonempty array");
            for (const auto& pr : pairs)
            {
                allow_keys(pr, "compare.pairs[]", {"x", "y"});
                cs.pairs.push_back({point(need(pr, "compare.pairs[]", "x"), "compare.pairs[].x", d),
                                    point(need(pr, "compare.pairs[]", "y"), "compare.pairs[].y", d)});
            }
            if (c.contains("theta_sweep"))
                cs.theta_sweep = number_list(c.at("theta_sweep"), "compare.theta_sweep");
            for (Real t : cs.theta_sweep)
                if (!(t > 0.0 && t <= 0.5))
                    schema_fail("compare.theta_sweep", "theta values must lie in (0, 1/2]");
            cfg.compare = std::move(cs);
        }

        if (doc.contains("outputs"))
        {
            const json& o = doc.at("outputs");
            allow_keys(o, "outputs", {"dir", "csv", "json"});
            if (o.contains("dir"))
                cfg.outputs.dir = text(o.at("dir"), "outputs.dir");
            if (o.contains("csv"))
            {
                if (!o.at("csv").is_boolean())
                    schema_fail("outputs.csv", "expected a boolean");
                cfg.outputs.csv = o.at("csv").get<bool>();
            }
            if (o.contains("json"))
            {
                if (!o.at("json").is_boolean())
                    schema_fail("outputs.json", "expected a boolean");
                cfg.outputs.json = o.at("json").get<bool>();
            }
        }

        cfg.canonical = doc;
        cfg.hash = fnv1a_hex(doc.dump());
        return cfg;
    }
    catch (const Error& err)
    {
        if (err.code() == ErrorCode::SchemaError)
            throw;
        throw Error(ErrorCode::SchemaError, err.what());
    }
    catch (const json::exception& err)
    {
        throw Error(ErrorCode::SchemaError, err.what());
    }
}

json load_config_document(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(bool(in), ErrorCode::IoError, "cannot read config '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    json doc;
    try
    {
        doc = json::parse(buf.str());
    }
    catch (const json::parse_error& err)
    {
        throw Error(ErrorCode::ParseError, err.what());
    }
    return doc;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return parse_config(load_config_document(path)); }

} // namespace pxspk
