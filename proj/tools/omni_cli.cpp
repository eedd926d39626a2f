#include <CLI11.hpp>

#include <omni/bir.hpp>
#include <omni/bir_reference.hpp>
#include <omni/data_io.hpp>
#include <omni/evalgap.hpp>
#include <omni/learners.hpp>
#include <omni/pav.hpp>
#include <omni/scenarios.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

using namespace omni;
namespace fs = std::filesystem;

namespace {

enum Exit { ok = 0, assertion = 1, usage = 2, io = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream f(p);
    if (!f) throw IoError("cannot write " + p.string());
    return f;
}

fs::path out_dir(const std::string& out)
{
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory " + out + ": " + ec.message());
    return fs::path(out);
}

// L from the sidecar next to the csv when present, else the given value
// (0 infers the largest row norm)
Dataset load_data(const std::string& path, double L)
{
    if (L <= 0) {
        const fs::path side = fs::path(path).replace_extension(".json");
        if (fs::exists(side)) {
            const auto j = read_json(side.string());
            if (j.contains("L")) L = j["L"].get<double>();
        }
    }
    return load_dataset_csv(path, L);
}

Link named_link(const std::string& name, double lr)
{
    if (name == "logistic") return logistic_link(lr);
    if (name == "affine") return affine_link(lr);
    if (name == "relu") return clipped_relu_link(lr);
    throw UsageError("unknown link " + name);
}

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::uint64_t seed_or(std::uint64_t d) const { return seed ? *seed : d; }
};

// ---- generate

struct GenFlags {
    std::string model = "realizable", link = "logistic", labels = "bernoulli", preset = "flip10", name = "data";
    std::size_t d = 2, n = 1000;
    double flip_rate = 0.1, L = 1.0;
};

int cmd_generate(const Globals& g, const GenFlags& f)
{
    const auto seed = g.seed_or(0);
    Dataset ds;
    std::string gen;
    nlohmann::json truth;
    if (f.model == "realizable") {
        const Link s = named_link(f.link, f.L);
        const auto w = realizable_weight(f.d);
        LabelMode mode;
        if (f.labels == "expected") mode = LabelMode::expected;
        else if (f.labels == "bernoulli") mode = LabelMode::bernoulli;
        else throw UsageError("labels must be expected or bernoulli");
        ds = gen_realizable(f.d, f.n, s, w, seed, mode, f.L);
        gen = "realizable:" + f.link + ":" + f.labels;
        truth = model_to_json(MultiIndexModel{{{s, w}}, 1.0, f.L});
    } else if (f.model == "agnostic") {
        ds = gen_agnostic(f.d, f.n, seed, {f.preset, f.flip_rate, f.L});
        gen = "agnostic:" + f.preset;
    } else {
        throw UsageError("model must be realizable or agnostic");
    }
    const auto dir = out_dir(g.out);
    save_dataset_csv(ds, (dir / (f.name + ".csv")).string());
    auto side = dataset_sidecar(ds, seed, gen);
    if (!truth.is_null()) side["truth"] = truth;
    write_json(side, (dir / (f.name + ".json")).string());
    std::cout << "wrote " << (dir / (f.name + ".csv")).string() << " n=" << ds.n() << " d=" << ds.d() << "\n";
    return ok;
}

// ---- train

struct TrainFlags {
    std::string algo = "isotron", data, stream;
    int T = 100;
    double eta = 0, beta = 1, R = 1, eps = 0.1, L = 0;
};

void write_trace(const fs::path& p, const IsotronTrace& tr, std::size_t rows)
{
    auto f = open_out(p);
    f << "t,sq_loss,grad_norm\n";
    for (std::size_t t = 0; t < rows; ++t) f << t << "," << num(tr.sq_loss[t]) << "," << num(tr.grad_norm[t]) << "\n";
}

int cmd_train(const Globals& g, const TrainFlags& f)
{
    const Dataset ds = load_data(f.data, f.L);
    TrainConfig cfg;
    cfg.T = f.T;
    cfg.eta = f.eta;
    cfg.beta = f.beta;
    cfg.R = f.R;
    cfg.eps = f.eps;
    cfg.seed = g.seed_or(0);
    validate_config(cfg);
    const auto dir = out_dir(g.out);
    nlohmann::json model;
    if (f.algo == "pav") {
        if (ds.d() != 1) throw UsageError("pav needs one-dimensional data, got d=" + std::to_string(ds.d()));
        std::vector<WeightedPoint1D> pts;
        for (std::size_t i = 0; i < ds.n(); ++i) pts.push_back({ds.x[i][0], ds.y[i], 1.0});
        model = step_to_json(pav_fit(pts));
    } else if (f.algo == "isotron") {
        const auto tr = isotron_fit(ds, cfg);
        model = model_to_json(MultiIndexModel{{{tr.links.back(), tr.w.back()}}, cfg.R, ds.L});
        write_trace(dir / "trace.csv", tr, tr.sq_loss.size());
    } else if (f.algo == "ideal-omnitron") {
        const auto m = ideal_omnitron_fit(ds, cfg);
        const double eta = cfg.eta > 0 ? cfg.eta : cfg.R / (ds.L * std::sqrt(static_cast<double>(cfg.T)));
        write_trace(dir / "trace.csv", detail::isotron_run(ds, cfg, eta), static_cast<std::size_t>(cfg.T));
        model = model_to_json(m);
    } else if (f.algo == "omnitron") {
        // without --stream the second half of the data is the gradient stream
        Dataset oracle = ds, stream;
        if (!f.stream.empty()) {
            stream = load_data(f.stream, ds.L);
        } else {
            const std::size_t h = ds.n() / 2;
            oracle.x.assign(ds.x.begin(), ds.x.begin() + static_cast<std::ptrdiff_t>(h));
            oracle.y.assign(ds.y.begin(), ds.y.begin() + static_cast<std::ptrdiff_t>(h));
            stream.x.assign(ds.x.begin() + static_cast<std::ptrdiff_t>(h), ds.x.end());
            stream.y.assign(ds.y.begin() + static_cast<std::ptrdiff_t>(h), ds.y.end());
            stream.L = ds.L;
        }
        IsotronTrace tr;
        const auto m = omnitron_fit(oracle, stream, cfg, &tr);
        write_trace(dir / "trace.csv", tr, tr.sq_loss.size());
        model = model_to_json(m);
    } else {
        throw UsageError("unknown algo " + f.algo);
    }
    write_json(model, (dir / "model.json").string());
    std::cout << "wrote " << (dir / "model.json").string() << "\n";
    return ok;
}

// ---- eval-omnigap

struct EvalFlags {
    std::string model, data;
    double eps = 0.1, beta = 1, L = 0;
    std::size_t cap = 64;
};

int cmd_eval(const Globals& g, const EvalFlags& f)
{
    const Dataset ds = load_data(f.data, f.L);
    auto j = read_json(f.model);
    if (j.contains("truth")) j = j["truth"];
    HeadPredictions hp;
    double R = 1.0;
    std::string kind;
    int sign = 0;
    try {
        if (j.contains("heads")) {
            const auto m = model_from_json(j);
            if (m.heads.empty() || m.heads.front().w.size() != ds.d())
                throw UsageError("model dimension does not match data d=" + std::to_string(ds.d()));
            R = m.R;
            hp = predictions(m, ds);
            kind = "multi-index";
        } else {
            if (ds.d() != 1) throw UsageError("step predictor needs one-dimensional data");
            const auto sp = step_from_json(j);
            hp = predictions(sp, ds);
            kind = "step";
            sign = sp.increasing ? 1 : -1;
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataFormatError(f.model + ": " + e.what());
    }
    auto grid = build_comparator_grid(ds.d(), ds.L, R, f.beta, f.eps, f.cap, g.seed_or(0));
    // a monotone step predictor is compared against same-direction comparators
    if (sign)
        std::erase_if(grid.weights, [&](const std::vector<double>& w) { return sign * w[0] < 0; });
    const auto rep = gap_sweep(hp, grid, ds, nullptr, true);
    const auto dir = out_dir(g.out);
    {
        auto out = open_out(dir / "omnigap.csv");
        out << "link_id,weight_id,omnigap,pl_gap\n";
        for (const auto& r : rep.rows)
            out << r.link_id << "," << r.weight_id << "," << num(r.omnigap) << "," << num(r.pl_gap) << "\n";
    }
    nlohmann::json s = {{"model_kind", kind},
                        {"n", ds.n()},
                        {"d", ds.d()},
                        {"links", grid.links.size()},
                        {"weights", grid.weights.size()},
                        {"max_omnigap", std::stod(num(rep.max_omnigap))},
                        {"max_omnigap_link", rep.og_link},
                        {"max_omnigap_weight", rep.og_weight},
                        {"max_pl_gap", std::stod(num(rep.max_pl_gap))},
                        {"max_pl_gap_link", rep.pl_link},
                        {"max_pl_gap_weight", rep.pl_weight}};
    write_json(s, (dir / "summary.json").string());
    std::cout << "max_omnigap " << num(rep.max_omnigap) << " max_pl_gap " << num(rep.max_pl_gap) << "\n";
    return ok;
}

// ---- bench-bir

struct BenchFlags {
    std::vector<std::size_t> sizes{1000, 10000, 100000, 1000000};
    int trials = 3;
};

BIRInstance bench_instance(std::size_t n, std::uint64_t seed)
{
    auto rng = make_rng(seed, Stream::bench, n);
    BIRInstance in;
    for (std::size_t i = 0; i < n; ++i) in.y.push_back(rng.uniform());
    for (std::size_t i = 0; i + 1 < n; ++i) {
        in.a.push_back(0.0);
        in.b.push_back(rng.bernoulli(0.2) ? 1e6 : rng.uniform(0.0, 2.0 / static_cast<double>(n)));
    }
    return in;
}

struct BenchRow {
    std::size_t n;
    double ms;
    std::string algo;
    double objective;
};

void write_svg(const fs::path& p, const std::vector<BenchRow>& rows)
{
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& r : rows) {
        const double x = std::log10(static_cast<double>(r.n)), y = std::log10(std::max(r.ms, 1e-3));
        x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    const double W = 480, H = 320, m = 50;
    auto px = [&](double x) { return m + (x - x0) / (x1 - x0) * (W - 2 * m); };
    auto py = [&](double y) { return H - m - (y - y0) / (y1 - y0) * (H - 2 * m); };
    auto f = open_out(p);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    f << "<line x1=\"" << m << "\" y1=\"" << H - m << "\" x2=\"" << W - m << "\" y2=\"" << H - m << "\" stroke=\"black\"/>\n";
    f << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << H - m << "\" stroke=\"black\"/>\n";
    f << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" font-size=\"12\" text-anchor=\"middle\">log10 n</text>\n";
    f << "<text x=\"12\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 " << H / 2
      << ")\" text-anchor=\"middle\">log10 time (ms)</text>\n";
    const char* colors[] = {"#1f77b4", "#d62728"};
    int c = 0;
    for (const std::string algo : {"exact", "reference"}) {
        std::string pts;
        for (const auto& r : rows)
            if (r.algo == algo)
                pts += num(px(std::log10(static_cast<double>(r.n)))) + "," +
                       num(py(std::log10(std::max(r.ms, 1e-3)))) + " ";
        if (!pts.empty())
            f << "<polyline fill=\"none\" stroke=\"" << colors[c] << "\" points=\"" << pts << "\"/>\n"
              << "<text x=\"" << W - m << "\" y=\"" << m + 14 * c << "\" font-size=\"11\" fill=\"" << colors[c]
              << "\" text-anchor=\"end\">" << algo << "</text>\n";
        ++c;
    }
    f << "</svg>\n";
}

int cmd_bench(const Globals& g, const BenchFlags& f)
{
    if (f.trials < 1) throw UsageError("trials must be at least 1");
    const auto seed = g.seed_or(0);
    std::vector<BenchRow> rows;
    double worst = 0;
    for (std::size_t n : f.sizes) {
        if (n < 1) throw UsageError("sizes must be positive");
        const auto in = bench_instance(n, seed);
        std::vector<double> ts;
        BIRSolution s;
        for (int k = 0; k < f.trials; ++k) {
            Stopwatch sw;
            s = solve_bir(in);
            ts.push_back(sw.seconds() * 1e3);
        }
        std::sort(ts.begin(), ts.end());
        const double ms = ts[ts.size() / 2];
        rows.push_back({n, ms, "exact", s.objective});
        if (n <= 5000) {
            Stopwatch sw;
            const auto r = solve_bir_naive_dp(in);
            rows.push_back({n, sw.seconds() * 1e3, "reference", r.objective});
            worst = std::max(worst, std::abs(r.objective - s.objective));
        }
        std::cout << "n=" << n << " exact_ms=" << num(ms) << "\n";
    }
    const auto dir = out_dir(g.out);
    {
        auto out = open_out(dir / "bench_bir.csv");
        out << "n,time_ms,algo,objective\n";
        for (const auto& r : rows) out << r.n << "," << num(r.ms) << "," << r.algo << "," << num(r.objective) << "\n";
    }
    write_svg(dir / "bench_bir.svg", rows);
    std::cout << "max_objective_diff " << num(worst) << "\n";
    return worst <= 1e-9 ? ok : assertion;
}

// ---- repro

int cmd_repro(const Globals& g, const std::string& target)
{
    ScenarioReport rep;
    if (target == "counterexample") rep = scenario_counterexample();
    else if (target == "pav-omnigap") rep = scenario_pav_omnigap(g.seed_or(303));
    else if (target == "isotron-realizable") rep = scenario_isotron_realizable(g.seed_or(505));
    else if (target == "erm-omni") rep = scenario_erm_omni(g.seed_or(404));
    else throw UsageError("unknown target " + target);
    for (const auto& c : rep.checks)
        std::cout << c.name << " measured=" << num(c.measured) << " required " << c.relation << " " << num(c.bound)
                  << " " << (c.pass() ? "PASS" : "FAIL") << "\n";
    std::cout << rep.name << " " << (rep.pass() ? "PASS" : "FAIL") << " seconds=" << num(rep.seconds) << "\n";
    return rep.pass() ? ok : assertion;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"omniprediction toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "random seed");
    app.add_option("--out", g.out, "output directory");

    GenFlags gf;
    auto* gen = app.add_subcommand("generate", "write a synthetic dataset and sidecar");
    gen->add_option("--model", gf.model)->check(CLI::IsMember({"realizable", "agnostic"}));
    gen->add_option("--d", gf.d)->check(CLI::PositiveNumber);
    gen->add_option("--n", gf.n)->check(CLI::PositiveNumber);
    gen->add_option("--link", gf.link)->check(CLI::IsMember({"logistic", "affine", "relu"}));
    gen->add_option("--labels", gf.labels)->check(CLI::IsMember({"expected", "bernoulli"}));
    gen->add_option("--preset", gf.preset)->check(CLI::IsMember({"flip10", "xor2d", "heavytail"}));
    gen->add_option("--flip-rate", gf.flip_rate)->check(CLI::Range(0.0, 1.0));
    gen->add_option("--L", gf.L)->check(CLI::PositiveNumber);
    gen->add_option("--name", gf.name, "file stem");

    TrainFlags tf;
    auto* train = app.add_subcommand("train", "fit a model");
    train->add_option("--algo", tf.algo)->check(CLI::IsMember({"isotron", "ideal-omnitron", "omnitron", "pav"}));
    train->add_option("--data", tf.data)->required();
    train->add_option("--stream", tf.stream, "gradient stream for omnitron");
    train->add_option("--T", tf.T);
    train->add_option("--eta", tf.eta, "0 selects the default");
    train->add_option("--beta", tf.beta);
    train->add_option("--R", tf.R);
    train->add_option("--eps", tf.eps);
    train->add_option("--L", tf.L, "feature bound, 0 reads the sidecar or infers");

    EvalFlags ef;
    auto* ev = app.add_subcommand("eval-omnigap", "sweep the comparator grid");
    ev->add_option("--model", ef.model, "model json or dataset sidecar")->required();
    ev->add_option("--data", ef.data)->required();
    ev->add_option("--grid-eps", ef.eps);
    ev->add_option("--grid-cap", ef.cap);
    ev->add_option("--beta", ef.beta);
    ev->add_option("--L", ef.L);

    BenchFlags bf;
    auto* bench = app.add_subcommand("bench-bir", "time the exact and reference solvers");
    bench->add_option("--sizes", bf.sizes)->delimiter(',');
    bench->add_option("--trials", bf.trials);

    std::string target;
    auto* repro = app.add_subcommand("repro", "rerun a named check");
    repro->add_option("target", target)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }
    if (seed_opt->count()) g.seed = seed;

    try {
        if (*gen) return cmd_generate(g, gf);
        if (*train) return cmd_train(g, tf);
        if (*ev) return cmd_eval(g, ef);
        if (*bench) return cmd_bench(g, bf);
        if (*repro) return cmd_repro(g, target);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return io;
    } catch (const DataFormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return io;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return io;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return assertion;
    }
    return usage;
}
