#include "pxspk/config.hpp"
#include "support.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>

using namespace pxspk;
using nlohmann::json;

namespace
{

json base_doc()
{
    return json::parse(R"({
      "medium": {"family": "gaussian", "sigma_c": 1.0, "ell_z": 1.0, "ell_x": 2.0, "d": 1},
      "regime": {"kind": "kinetic", "theta": 0.05},
      "grid": {"n": 256, "length": 128.0, "dz": 0.0078125},
      "source": {"width": 1.0},
      "ensemble": {"n_realizations": 10, "checkpoints": [0.5], "probes": [{"r": [0.0], "x": [[0.0], [1.0]]}]}
    })");
}

ErrorCode code_of(const std::function<void()>& f)
{
    try
    {
        f();
    }
    catch (const Error& e)
    {
        return e.code();
    }
    return ErrorCode::InvalidParameter;
}

ErrorCode parse_code(const json& doc)
{
    return code_of([&] { parse_config(doc); });
}

} // namespace

TEST_CASE("a minimal config parses with defaults")
{
    const auto cfg = parse_config(base_doc());
    CHECK(cfg.medium.d() == 1);
    CHECK(cfg.medium.R0() == doctest::Approx(std::sqrt(kTwoPi)));
    CHECK(cfg.regime.kind == RegimeKind::Kinetic);
    CHECK(cfg.regime.epsilon == doctest::Approx(0.05));
    CHECK(cfg.grid.n == 256);
    CHECK(cfg.grid.dz == 0.0078125);
    CHECK(cfg.source.amplitude == Complex(1.0));
    CHECK(cfg.ensemble.solver == SolverKind::Ito);
    CHECK(cfg.ensemble.splitting == Splitting::Strang);
    CHECK(cfg.ensemble.seed == 0);
    CHECK(cfg.shards == 1);
    CHECK(cfg.ensemble.probes.size() == 1);
    CHECK(cfg.ensemble.probes[0].X.cols() == 2);
    CHECK(cfg.ensemble.probes[0].X(0, 1) == 1.0);
    CHECK(!cfg.compare);
    CHECK(!cfg.physical);
    CHECK(cfg.outputs.dir == "out");
    CHECK(cfg.hash.size() == 16);
}

TEST_CASE("config hash is FNV-1a of the canonical dump")
{
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("foobar") == "85944171f73967e8");
    const auto a = parse_config(base_doc());
    const auto b = parse_config(base_doc());
    CHECK(a.hash == b.hash);
    CHECK(a.hash == fnv1a_hex(base_doc().dump()));
    json changed = base_doc();
    changed["ensemble"]["seed"] = 5;
    CHECK(parse_config(changed).hash != a.hash);
}

TEST_CASE("format_real is the shortest round-trip representation")
{
    CHECK(format_real(0.1) == "0.1");
    CHECK(format_real(1e-12) == "1e-12");
    CHECK(format_real(-2.0) == "-2");
    CHECK(format_real(0.0) == "0");
    for (Real v : {1.0 / 3.0, std::sqrt(2.0), 6.02214076e23, -4.9e-324, 0.1 + 0.2})
    {
        const std::string s = format_real(v);
        Real back = 0.0;
        std::from_chars(s.data(), s.data() + s.size(), back);
        CHECK(back == v);
        CHECK(s.size() <= 24);
    }
}

TEST_CASE("unknown keys are rejected at every level")
{
    for (const char* path : {"", "medium", "regime", "grid", "source", "ensemble"})
    {
        json doc = base_doc();
        if (std::string(path).empty())
            doc["extra"] = 1;
        else
            doc[path]["extra"] = 1;
        CHECK(parse_code(doc) == ErrorCode::SchemaError);
    }
    json probe = base_doc();
    probe["ensemble"]["probes"][0]["y"] = json::array();
    CHECK(parse_code(probe) == ErrorCode::SchemaError);
}

TEST_CASE("schema violations raise SchemaError")
{
    auto with = [](const std::function<void(json&)>& edit) {
        json d = base_doc();
        edit(d);
        return parse_code(d);
    };
    CHECK(with([](json& d) { d["medium"]["ell_x"] = 0.0; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["medium"]["ell_x"] = -1.0; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["medium"]["ell_z"] = 0.0; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["medium"]["sigma_c"] = -0.1; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["medium"]["d"] = 3; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["medium"]["family"] = "kolmogorov"; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["medium"].erase("sigma_c"); }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["medium"]["sigma_c"] = "one"; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d.erase("grid"); }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["grid"]["n"] = 100; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["grid"]["n"] = 4; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["grid"]["n"] = 256.5; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["grid"]["dz"] = 0.0; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["regime"]["epsilon"] = 0.1; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["regime"]["kind"] = "ballistic"; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["regime"]["theta"] = 0.9; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["regime"] = {{"kind", "custom"}, {"theta", 0.1}}; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["source"]["width"] = 0.0; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["source"]["profile"] = "bessel"; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["source"]["amplitude"] = {1.0, 2.0, 3.0}; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["ensemble"]["n_realizations"] = 0; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["ensemble"]["solver"] = "euler"; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["ensemble"]["splitting"] = "yoshida"; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["ensemble"]["probes"] = json::array(); }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["ensemble"]["checkpoints"] = json::array(); }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["ensemble"]["checkpoints"] = {-0.5}; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["ensemble"]["probes"][0]["r"] = {0.0, 1.0}; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["ensemble"]["probes"][0]["x"] = json::array(); }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["ensemble"]["shards"] = 11; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["ensemble"]["seed"] = "seven"; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d["outputs"] = {{"csv", "yes"}}; }) == ErrorCode::SchemaError);
    CHECK(with([](json& d) { d = json::array(); }) == ErrorCode::SchemaError);
}

TEST_CASE("optional sections and alternative forms")
{
    json d = base_doc();
    d["medium"]["sigma_c"] = 0.0;
    d["source"]["amplitude"] = {0.5, -0.25};
    d["ensemble"]["solver"] = "paraxial";
    d["ensemble"]["splitting"] = "lie";
    d["ensemble"]["shards"] = 5;
    d["ensemble"]["seed"] = 18446744073709551615ull;
    d["compare"] = {{"r", {0.1}},
                    {"z", 0.5},
                    {"pairs", {{{"x", {0.0}}, {"y", {1.0}}}, {{"x", {-1.0}}, {"y", {2.0}}}}},
                    {"theta_sweep", {0.1, 0.05}},
                    {"paraxial_dz", 0.01}};
    d["outputs"] = {{"dir", "results"}, {"csv", false}, {"json", true}};
    const auto cfg = parse_config(d);
    CHECK(cfg.medium.is_vacuum());
    CHECK(cfg.source.amplitude == Complex(0.5, -0.25));
    CHECK(cfg.ensemble.solver == SolverKind::Paraxial);
    CHECK(cfg.ensemble.splitting == Splitting::Lie);
    CHECK(cfg.shards == 5);
    CHECK(cfg.ensemble.seed == 18446744073709551615ull);
    REQUIRE(cfg.compare);
    CHECK(cfg.compare->z == 0.5);
    CHECK(cfg.compare->pairs.size() == 2);
    CHECK(cfg.compare->theta_sweep == std::vector<Real>{0.1, 0.05});
    CHECK(cfg.compare->paraxial_dz == 0.01);
    CHECK(cfg.outputs.dir == "results");
    CHECK(!cfg.outputs.csv);

    const auto probes = pair_probes(*cfg.compare);
    REQUIRE(probes.size() == 2);
    CHECK(probes[1].r(0) == 0.1);
    CHECK(probes[1].X(0, 0) == -1.0);
    CHECK(probes[1].X(0, 1) == 2.0);

    json bad = d;
    bad["compare"]["theta_sweep"] = {0.6};
    CHECK(parse_code(bad) == ErrorCode::SchemaError);
    bad = d;
    bad["compare"]["pairs"] = json::array();
    CHECK(parse_code(bad) == ErrorCode::SchemaError);
    bad = d;
    bad["compare"]["pairs"][0]["z"] = 1;
    CHECK(parse_code(bad) == ErrorCode::SchemaError);
}

TEST_CASE("physical regime sections resolve to dimensionless parameters")
{
    json d = base_doc();
    d["regime"] = {{"physical", {{"k0", 1e7}, {"l0", 2e-3}, {"w0", 0.025}, {"Z", 2.5e5}, {"sigma", 1e-7}}}};
    const auto cfg = parse_config(d);
    REQUIRE(cfg.physical);
    CHECK(cfg.regime.theta == doctest::Approx(5e-5).epsilon(1e-12));
    CHECK(cfg.regime.epsilon == doctest::Approx(0.08).epsilon(1e-12));
    CHECK(cfg.regime.eta == doctest::Approx(1.0).epsilon(1e-12));
    d["regime"]["physical"].erase("Z");
    CHECK(parse_code(d) == ErrorCode::SchemaError);
}

TEST_CASE("load_config distinguishes unreadable, malformed and invalid files")
{
    const auto dir = std::filesystem::temp_directory_path() / "pxspk_test_config";
    std::filesystem::create_directories(dir);
    CHECK(code_of([&] { load_config(dir / "missing.json"); }) == ErrorCode::IoError);
    {
        std::ofstream(dir / "broken.json") << "{\"medium\": ";
    }
    CHECK(code_of([&] { load_config(dir / "broken.json"); }) == ErrorCode::ParseError);
    {
        json d = base_doc();
        d["medium"]["ell_x"] = 0.0;
        std::ofstream(dir / "invalid.json") << d.dump();
    }
    CHECK(code_of([&] { load_config(dir / "invalid.json"); }) == ErrorCode::SchemaError);
    {
        std::ofstream(dir / "good.json") << base_doc().dump(2);
    }
    CHECK(load_config(dir / "good.json").hash == parse_config(base_doc()).hash);
    std::filesystem::remove_all(dir);
}
