#include "pxspk/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#ifndef PXSPK_VERSION
#define PXSPK_VERSION "0.0.0-unknown"
#endif

namespace pxspk
{

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view version() { return PXSPK_VERSION; }

namespace
{

/// Failure while loading or validating the configuration (exit code 2).
class ConfigFailure : public std::runtime_error
{
public:
    explicit ConfigFailure(const Error& e) : std::runtime_error(e.what()) {}
};

struct RunContext
{
    std::string command;
    fs::path dir;
    std::string hash;
    std::uint64_t seed = 0;
};

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Timestamps go only to this sidecar log.
void log_line(const RunContext& ctx, const std::string& message)
{
    std::ofstream log(ctx.dir / "pxspk.log", std::ios::app);
    log << utc_timestamp() << ' ' << ctx.command << ' ' << message << '\n';
}

RunContext open_run(const std::string& command, const CliOptions& opts, const ExperimentConfig& cfg)
{
    RunContext ctx;
    ctx.command = command;
    ctx.dir = opts.out.value_or(fs::path(cfg.outputs.dir));
    ctx.hash = cfg.hash;
    ctx.seed = cfg.ensemble.seed;
    std::error_code ec;
    fs::create_directories(ctx.dir, ec);
    require(!ec, ErrorCode::IoError, "cannot create output directory '" + ctx.dir.string() + "'");
    log_line(ctx, "start version=" + std::string(version()) + " config_hash=" + ctx.hash);
    return ctx;
}

json meta(const RunContext& ctx)
{
    return {{"version", std::string(version())}, {"command", ctx.command}, {"config_hash", ctx.hash},
            {"seed", ctx.seed}};
}

std::string csv_preamble(const RunContext& ctx)
{
    return "# pxspk " + std::string(version()) + " command=" + ctx.command + " config_hash=" + ctx.hash +
           " seed=" + std::to_string(ctx.seed) + "\n";
}

/// Single writer for every artifact; files appear atomically.
void write_file(const fs::path& path, const std::string& content)
{
    const fs::path tmp = path.string() + ".partial";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        require(bool(os), ErrorCode::IoError, "cannot write '" + tmp.string() + "'");
        os.write(content.data(), std::streamsize(content.size()));
        require(bool(os), ErrorCode::IoError, "failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    require(!ec, ErrorCode::IoError, "cannot move '" + tmp.string() + "' into place");
}

void write_json(const fs::path& path, const json& doc) { write_file(path, doc.dump(2) + "\n"); }

std::string joined(const VectorXr& v)
{
    std::string s;
    for (Index i = 0; i < v.size(); ++i)
        s += (i ? ";" : "") + format_real(v(i));
    return s;
}

json vec_json(const VectorXr& v) { return std::vector<Real>(v.data(), v.data() + v.size()); }

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

json estimate_json(const MomentEstimate& e)
{
    return {{"value", complex_json(e.value)}, {"std_error", e.std_error}, {"n_samples", e.n_samples}};
}

json test_json(const TestResult& t)
{
    return {{"statistic", t.statistic}, {"p_value", t.p_value}, {"n", t.n}, {"note", t.note}};
}

template <class T, class F>
std::string opt_field(const std::optional<T>& v, F get)
{
    return v ? format_real(get(*v)) : std::string();
}

} // namespace

ExperimentConfig resolve_config(const CliOptions& opts)
{
    try
    {
        json doc = load_config_document(opts.config);
        if (opts.seed)
        {
            if (doc.is_object() && doc.contains("ensemble") && doc["ensemble"].is_object())
                doc["ensemble"]["seed"] = *opts.seed;
        }
        return parse_config(doc);
    }
    catch (const Error& e)
    {
        throw ConfigFailure(e);
    }
}

int run_guarded(const std::function<int()>& body, std::ostream& err)
{
    try
    {
        return body();
    }
    catch (const ConfigFailure& e)
    {
        err << "config error: " << e.what() << '\n';
        return 2;
    }
    catch (const Error& e)
    {
        err << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::SchemaError || e.code() == ErrorCode::ParseError ? 2 : 1;
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

// ---------------------------------------------------------------------------

int cmd_validate(const CliOptions& opts, std::ostream& out)
{
    const ExperimentConfig cfg = resolve_config(opts);
    const auto& r = cfg.regime;
    out << "config_hash: " << cfg.hash << '\n';
    out << "regime: kind=" << to_string(r.kind) << " theta=" << format_real(r.theta)
        << " epsilon=" << format_real(r.epsilon) << " eta=" << format_real(r.eta) << " beta=" << format_real(r.beta)
        << " gamma=" << format_real(r.gamma) << '\n';
    if (cfg.physical)
    {
        const auto p = physical_to_dimensionless(*cfg.physical);
        out << "physical: theta=" << format_real(p.theta) << " epsilon=" << format_real(p.epsilon)
            << " eta=" << format_real(p.eta) << " consistency_residual=" << format_real(p.consistency_residual)
            << " wide_beam=" << (p.wide_beam ? "true" : "false") << '\n';
    }
    const auto rep = validate_assumptions(cfg.medium, cfg.regime);
    for (const auto& c : rep.checks)
        out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    out << "small_parameter_metric: " << format_real(rep.small_parameter_metric) << '\n';
    const bool ok = rep.all_passed();
    out << "result: " << (ok ? "all checks passed" : "some checks failed") << '\n';
    return ok ? 0 : 1;
}

int cmd_propagate(const CliOptions& opts, const PropagateCommand& cmd, std::ostream& out)
{
    const ExperimentConfig cfg = resolve_config(opts);
    RunContext ctx = open_run("propagate", opts, cfg);
    const SolverKind solver = cmd.solver.value_or(cfg.ensemble.solver);

    std::vector<Real> depths = cmd.snapshot_at.empty() ? cfg.ensemble.checkpoints : cmd.snapshot_at;
    std::sort(depths.begin(), depths.end());
    depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
    require(!depths.empty() && depths.front() >= 0.0, ErrorCode::InvalidParameter,
            "snapshot depths must be nonnegative");
    std::vector<Real> positive;
    std::copy_if(depths.begin(), depths.end(), std::back_inserter(positive), [](Real z) { return z > 0.0; });

    const Field u0 = make_source(cfg.source, cfg.regime, cfg.grid);
    std::vector<Field> fields;
    Real solver_drift = 0.0;
    if (depths.front() == 0.0)
        fields.push_back(u0);
    if (!positive.empty())
    {
        PropagationOptions po;
        po.splitting = cfg.ensemble.splitting;
        po.checkpoints = positive;
        po.keep_snapshots = true;
        SeedPath path;
        path.seed = cfg.ensemble.seed;
        const Propagation p = solver == SolverKind::Ito
                                  ? propagate_ito(u0, cfg.medium, cfg.regime, positive.back(), path, po)
                                  : propagate_paraxial(u0, cfg.medium, cfg.regime, positive.back(), path, po);
        fields.insert(fields.end(), p.snapshots.begin(), p.snapshots.end());
        solver_drift = p.max_norm_drift;
    }

    const Real n0 = u0.l2_norm();
    std::ostringstream log;
    log << csv_preamble(ctx) << "z,l2_norm,relative_drift,free_space_rel_err,file\n";
    json snaps = json::array();
    Real max_drift = solver_drift, max_err = 0.0;
    for (std::size_t i = 0; i < fields.size(); ++i)
    {
        const Field& f = fields[i];
        const std::string name = "snapshot_" + std::to_string(i) + ".pxfld";
        std::ostringstream bin;
        write_snapshot(bin, f);
        write_file(ctx.dir / name, bin.str());
        const Real norm = f.l2_norm();
        const Real drift = std::abs(norm / n0 - 1.0);
        max_drift = std::max(max_drift, drift);
        json s = {{"z", f.z}, {"file", name}, {"l2_norm", norm}, {"relative_drift", drift}};
        std::string err_field;
        if (cfg.medium.is_vacuum())
        {
            const VectorXc exact = free_space_field(cfg.source, cfg.regime, f.z, cfg.grid);
            const Real err = (f.values - exact).norm() / exact.norm();
            max_err = std::max(max_err, err);
            s["free_space_rel_err"] = err;
            err_field = format_real(err);
        }
        snaps.push_back(s);
        log << format_real(f.z) << ',' << format_real(norm) << ',' << format_real(drift) << ',' << err_field << ','
            << name << '\n';
    }
    write_file(ctx.dir / "norm_log.csv", log.str());
    json doc = {{"meta", meta(ctx)},
                {"solver", std::string(to_string(solver))},
                {"realization", 0},
                {"snapshots", snaps},
                {"max_norm_drift", max_drift}};
    if (cfg.medium.is_vacuum())
        doc["max_free_space_rel_err"] = max_err;
    write_json(ctx.dir / "propagate.json", doc);

    out << "solver: " << to_string(solver) << '\n';
    out << "snapshots: " << fields.size() << " written to " << ctx.dir.string() << '\n';
    out << "max_norm_drift: " << format_real(max_drift) << '\n';
    if (cfg.medium.is_vacuum())
        out << "max_free_space_rel_err: " << format_real(max_err) << '\n';
    log_line(ctx, "done");
    return 0;
}

// ---------------------------------------------------------------------------

namespace
{

json summary_json(const std::vector<CheckpointSummary>& summary, const EnsembleResult& res)
{
    json cps = json::array();
    for (const auto& cs : summary)
    {
        json pts = json::array();
        for (const auto& p : cs.points)
        {
            json e = {{"probe", p.probe},
                      {"point", p.point},
                      {"r", vec_json(res.probes[p.probe].r)},
                      {"x", vec_json(res.probes[p.probe].X.col(p.point))},
                      {"mean_intensity", estimate_json(p.mean_intensity)}};
            if (p.scintillation)
                e["scintillation"] = {{"value", p.scintillation->value.real()},
                                      {"std_error", p.scintillation->std_error}};
            if (p.ks)
                e["ks_exponential"] = test_json(*p.ks);
            if (p.circularity)
                e["circularity"] = test_json(*p.circularity);
            pts.push_back(e);
        }
        json ind = json::array();
        for (const auto& row : cs.independence)
            ind.push_back({{"probe_a", row.probe_a}, {"probe_b", row.probe_b}, {"test", test_json(row.test)}});
        cps.push_back({{"z", cs.z}, {"points", pts}, {"independence", ind}});
    }
    return cps;
}

std::string summary_csv(const RunContext& ctx, const std::vector<CheckpointSummary>& summary)
{
    std::ostringstream os;
    os << csv_preamble(ctx)
       << "z,probe,point,n,mean_intensity,mean_intensity_se,scintillation,scintillation_se,ks_statistic,ks_p,"
          "circularity,circularity_p\n";
    for (const auto& cs : summary)
        for (const auto& p : cs.points)
            os << format_real(cs.z) << ',' << p.probe << ',' << p.point << ',' << p.mean_intensity.n_samples << ','
               << format_real(p.mean_intensity.value.real()) << ',' << format_real(p.mean_intensity.std_error) << ','
               << opt_field(p.scintillation, [](const MomentEstimate& e) { return e.value.real(); }) << ','
               << opt_field(p.scintillation, [](const MomentEstimate& e) { return e.std_error; }) << ','
               << opt_field(p.ks, [](const TestResult& t) { return t.statistic; }) << ','
               << opt_field(p.ks, [](const TestResult& t) { return t.p_value; }) << ','
               << opt_field(p.circularity, [](const TestResult& t) { return t.statistic; }) << ','
               << opt_field(p.circularity, [](const TestResult& t) { return t.p_value; }) << '\n';
    return os.str();
}

std::string independence_csv(const RunContext& ctx, const std::vector<CheckpointSummary>& summary)
{
    std::ostringstream os;
    os << csv_preamble(ctx) << "z,probe_a,probe_b,correlation,p_value\n";
    for (const auto& cs : summary)
        for (const auto& row : cs.independence)
            os << format_real(cs.z) << ',' << row.probe_a << ',' << row.probe_b << ','
               << format_real(row.test.statistic) << ',' << format_real(row.test.p_value) << '\n';
    return os.str();
}

} // namespace

int cmd_experiment(const CliOptions& opts, const ExperimentCommand& cmd, std::ostream& out)
{
    ExperimentConfig cfg = resolve_config(opts);
    cfg.ensemble.threads = opts.threads;
    RunContext ctx = open_run("experiment", opts, cfg);
    const fs::path shard_dir = ctx.dir / "shards";
    std::error_code ec;
    fs::create_directories(shard_dir, ec);
    require(!ec, ErrorCode::IoError, "cannot create shard directory");

    const Index shards = cfg.shards;
    if (cmd.shard)
        require(*cmd.shard >= 0 && *cmd.shard < shards, ErrorCode::InvalidParameter,
                "shard index must lie in [0, " + std::to_string(shards) + ")");

    auto shard_path = [&](Index k) { return shard_dir / ("shard_" + std::to_string(k) + ".pxens"); };
    std::vector<EnsembleResult> parts(static_cast<std::size_t>(shards));
    std::vector<std::string> status(static_cast<std::size_t>(shards));
    auto ensure = [&](Index k) {
        const EnsembleConfig sc = shard_config(cfg.ensemble, k, shards);
        if (fs::exists(shard_path(k)))
        {
            try
            {
                std::ifstream is(shard_path(k), std::ios::binary);
                std::string tag;
                EnsembleResult r = read_ensemble(is, &tag);
                if (tag == cfg.hash && r.first_realization == sc.first_realization &&
                    r.n_realizations() == sc.n_realizations)
                {
                    parts[std::size_t(k)] = std::move(r);
                    status[std::size_t(k)] = "reused";
                    return;
                }
            }
            catch (const Error&)
            {
            }
        }
        try
        {
            EnsembleResult r = run_ensemble(sc, cfg.medium, cfg.regime, cfg.source, cfg.grid);
            std::ostringstream bin;
            write_ensemble(bin, r, cfg.hash);
            write_file(shard_path(k), bin.str());
            parts[std::size_t(k)] = std::move(r);
            status[std::size_t(k)] = "computed";
        }
        catch (const std::exception& e)
        {
            status[std::size_t(k)] = std::string("failed: ") + e.what();
        }
    };

    std::vector<Index> todo;
    if (cmd.shard)
        todo.push_back(*cmd.shard);
    else
        for (Index k = 0; k < shards; ++k)
            todo.push_back(k);
    bool failed = false;
    json report = json::array();
    for (Index k : todo)
    {
        ensure(k);
        const auto& st = status[std::size_t(k)];
        out << "shard " << k << "/" << shards << ": " << st << '\n';
        log_line(ctx, "shard " + std::to_string(k) + " " + st);
        report.push_back({{"shard", k}, {"status", st}});
        failed |= st.rfind("failed", 0) == 0;
    }
    if (failed)
    {
        write_json(ctx.dir / "experiment_status.json", {{"meta", meta(ctx)}, {"shards", report}});
        out << "experiment incomplete; per-shard status in experiment_status.json\n";
        return 1;
    }
    if (cmd.shard)
        return 0;

    EnsembleResult all;
    for (auto& part : parts)
        all = EnsembleResult::merge(all, part);
    const auto summary = summarize_ensemble(all);
    json doc = {{"meta", meta(ctx)},
                {"solver", std::string(to_string(cfg.ensemble.solver))},
                {"n_realizations", all.n_realizations()},
                {"shards", shards},
                {"max_norm_drift", all.max_norm_drift},
                {"max_wraparound", all.max_wraparound},
                {"checkpoints", summary_json(summary, all)}};
    if (cfg.outputs.json)
        write_json(ctx.dir / "results.json", doc);
    if (cfg.outputs.csv)
    {
        write_file(ctx.dir / "scintillation.csv", summary_csv(ctx, summary));
        if (!summary.empty() && !summary.front().independence.empty())
            write_file(ctx.dir / "independence.csv", independence_csv(ctx, summary));
    }

    for (const auto& cs : summary)
        for (const auto& p : cs.points)
            if (p.point == 0)
            {
                out << "z=" << format_real(cs.z) << " probe=" << p.probe
                    << " mean_I=" << format_real(p.mean_intensity.value.real());
                if (p.scintillation)
                    out << " S=" << format_real(p.scintillation->value.real()) << " +- "
                        << format_real(p.scintillation->std_error);
                if (p.ks)
                    out << " ks_p=" << format_real(p.ks->p_value);
                out << '\n';
            }
    log_line(ctx, "done");
    return 0;
}

// ---------------------------------------------------------------------------

int cmd_compare_moments(const CliOptions& opts, std::ostream& out)
{
    const ExperimentConfig cfg = resolve_config(opts);
    if (!cfg.compare)
        throw ConfigFailure(Error(ErrorCode::SchemaError, "compare-moments needs a compare section"));
    RunContext ctx = open_run("compare-moments", opts, cfg);
    const unsigned threads = opts.threads;

    const EnsembleResult ref = run_pair_ensemble(cfg, cfg.ensemble.solver, cfg.regime, cfg.grid, threads);
    const auto rows = compare_pairs(cfg, ref);

    std::ostringstream csv;
    csv << csv_preamble(ctx)
        << "z,r,x,y,n,mc_re,mc_im,mc_se,prelimit_re,prelimit_im,prelimit_quadrature_error,limit_formula,limit_re,"
           "limit_im,deviation,tolerance,pass\n";
    json jrows = json::array();
    bool all_pass = true;
    for (const auto& row : rows)
    {
        all_pass &= row.pass;
        csv << format_real(cfg.compare->z) << ',' << joined(cfg.compare->r) << ',' << joined(row.x) << ','
            << joined(row.y) << ',' << row.monte_carlo.n_samples << ',' << format_real(row.monte_carlo.value.real())
            << ',' << format_real(row.monte_carlo.value.imag()) << ',' << format_real(row.monte_carlo.std_error)
            << ',' << format_real(row.prelimit.value.real()) << ',' << format_real(row.prelimit.value.imag()) << ','
            << format_real(row.prelimit.quadrature_error) << ','
            << (row.limit ? std::string(to_string(row.limit->formula)) : std::string()) << ','
            << opt_field(row.limit, [](const AnalyticMoment& m) { return m.value.real(); }) << ','
            << opt_field(row.limit, [](const AnalyticMoment& m) { return m.value.imag(); }) << ','
            << format_real(row.deviation) << ',' << format_real(row.tolerance) << ',' << (row.pass ? "pass" : "fail")
            << '\n';
        json j = {{"x", vec_json(row.x)},
                  {"y", vec_json(row.y)},
                  {"monte_carlo", estimate_json(row.monte_carlo)},
                  {"prelimit", {{"value", complex_json(row.prelimit.value)},
                                {"quadrature_error", row.prelimit.quadrature_error}}},
                  {"deviation", row.deviation},
                  {"tolerance", row.tolerance},
                  {"pass", row.pass}};
        if (row.limit)
            j["limit"] = {{"formula", std::string(to_string(row.limit->formula))},
                          {"value", complex_json(row.limit->value)}};
        jrows.push_back(j);
    }
    if (cfg.outputs.csv)
        write_file(ctx.dir / "compare_moments.csv", csv.str());
    json doc = {{"meta", meta(ctx)},
                {"solver", std::string(to_string(cfg.ensemble.solver))},
                {"z", cfg.compare->z},
                {"r", vec_json(cfg.compare->r)},
                {"pairs", jrows},
                {"all_pass", all_pass}};
    out << "pairs: " << rows.size() << " within 3 sigma: " << (all_pass ? "all" : "not all") << '\n';

    if (!cfg.compare->theta_sweep.empty())
    {
        const auto sweep = theta_sweep(cfg, rows, threads);
        std::ostringstream sc;
        sc << csv_preamble(ctx)
           << "theta,max_discrepancy,combined_se,worst_pair,max_vs_prelimit,se_vs_prelimit,nonincreasing\n";
        json js = json::array();
        bool trend = true;
        for (const auto& s : sweep)
        {
            trend &= s.nonincreasing;
            sc << format_real(s.theta) << ',' << format_real(s.max_discrepancy) << ',' << format_real(s.combined_se)
               << ',' << s.worst_pair << ',' << format_real(s.max_vs_prelimit) << ',' << format_real(s.se_vs_prelimit)
               << ',' << (s.nonincreasing ? "true" : "false") << '\n';
            js.push_back({{"theta", s.theta},
                          {"max_discrepancy", s.max_discrepancy},
                          {"combined_se", s.combined_se},
                          {"worst_pair", s.worst_pair},
                          {"max_vs_prelimit", s.max_vs_prelimit},
                          {"se_vs_prelimit", s.se_vs_prelimit},
                          {"nonincreasing", s.nonincreasing}});
            out << "theta=" << format_real(s.theta) << " max_discrepancy=" << format_real(s.max_discrepancy)
                << " combined_se=" << format_real(s.combined_se) << '\n';
        }
        const bool final_ok = !sweep.empty() && sweep.back().max_discrepancy < 3.0 * sweep.back().combined_se;
        if (cfg.outputs.csv)
            write_file(ctx.dir / "theta_sweep.csv", sc.str());
        doc["theta_sweep"] = {{"rows", js}, {"nonincreasing", trend}, {"final_within_3se", final_ok}};
        out << "trend nonincreasing: " << (trend ? "yes" : "no")
            << ", final within 3 combined se: " << (final_ok ? "yes" : "no") << '\n';
    }
    if (cfg.outputs.json)
        write_json(ctx.dir / "compare_moments.json", doc);
    log_line(ctx, "done");
    return 0;
}

int cmd_calibrate_ks(const CliOptions& opts, const CalibrateCommand& cmd, std::ostream& out)
{
    const std::uint64_t seed = opts.seed.value_or(0);
    const auto cal = calibrate_ks(cmd.n, cmd.trials, seed);
    out << "n: " << cal.n << '\n'
        << "trials: " << cal.trials << '\n'
        << "pass_fraction_p_gt_0.01: " << format_real(cal.pass_fraction) << '\n'
        << "critical_statistic_99: " << format_real(cal.critical_statistic) << '\n';
    if (opts.out)
    {
        RunContext ctx;
        ctx.command = "calibrate-ks";
        ctx.dir = *opts.out;
        ctx.hash = "none";
        ctx.seed = seed;
        std::error_code ec;
        fs::create_directories(ctx.dir, ec);
        require(!ec, ErrorCode::IoError, "cannot create output directory");
        log_line(ctx, "start");
        write_json(ctx.dir / "calibrate_ks.json", {{"meta", meta(ctx)},
                                                   {"n", cal.n},
                                                   {"trials", cal.trials},
                                                   {"pass_fraction", cal.pass_fraction},
                                                   {"critical_statistic", cal.critical_statistic}});
        log_line(ctx, "done");
    }
    return 0;
}

} // namespace pxspk
