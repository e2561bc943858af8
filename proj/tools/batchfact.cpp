// batchfact: generation, benchmark and compression workflows.
// Every run prints one JSON object per line; fields under "timing" are the
// only ones that vary between identical runs.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <batchfact/batch.hpp>
#include <batchfact/block_jacobi.hpp>
#include <batchfact/h2/compress.hpp>
#include <batchfact/jacobi.hpp>
#include <batchfact/matrix.hpp>
#include <batchfact/qr.hpp>
#include <batchfact/random.hpp>
#include <batchfact/rsvd.hpp>
#include <batchfact/testmat.hpp>

using json = nlohmann::ordered_json;
using namespace batchfact;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_nonconvergence = 2;

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct Common {
    std::size_t threads = 0;
    std::string precision = "f64";
    std::uint64_t seed = 1;
    std::string report;
    bool strict = false;
};

class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_)
                throw std::runtime_error("cannot open report file " + path);
        }
    }
    void emit(const json& j) {
        std::ostream& os = file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout;
        os << j.dump() << '\n';
        os.flush();
    }

private:
    std::ofstream file_;
};

json common_json(const Common& c) {
    return {{"threads", num_threads()}, {"precision", c.precision}, {"seed", c.seed}, {"strict", c.strict}};
}

template <typename T>
std::vector<double> to_double(const std::vector<T>& v) {
    return {v.begin(), v.end()};
}

template <typename T>
double sigma_error(const std::vector<T>& got, const std::vector<T>& want) {
    double worst = 0;
    for (std::size_t i = 0; i < want.size(); ++i) {
        const double w = want[i], g = got[i];
        worst = std::max(worst, w > 0 ? std::abs(g - w) / w : std::abs(g));
    }
    return worst;
}

template <typename T>
double svd_residual(const Matrix<T>& A, const SvdResult<T>& s) {
    const auto USV = multiply(scale_columns<T>(s.U, s.sigma), *s.V, op_t::normal, op_t::transposed);
    return double(frobenius_diff(A, USV)) / std::max(double(frobenius(A)), 1e-300);
}

spectrum_mode_t parse_mode(const std::string& s) {
    return s == "arithmetic" ? spectrum_mode_t::arithmetic : spectrum_mode_t::geometric;
}

// ---------------------------------------------------------------- gen

struct GenConfig {
    index_t m = 32, n = 32, rank = -1;
    double cond = 1e4;
    std::string mode = "geometric";
    std::string out;
};

template <typename T>
int run_gen(const GenConfig& g, const Common& c, Sink& sink) {
    SpectrumSpec spec{g.n, parse_mode(g.mode), g.cond, g.rank, {}};
    const auto tm = make_matrix<T>(g.m, spec, c.seed);
    if (!g.out.empty())
        save_matrix(g.out, tm.A);
    json cfg = {{"m", g.m}, {"n", g.n}, {"cond", g.cond}, {"mode", g.mode}, {"rank", spec.effective_rank()},
                {"out", g.out}};
    cfg.update(common_json(c));
    sink.emit({{"command", "gen"},
               {"config", cfg},
               {"metrics", {{"sigma", to_double(tm.sigma)}, {"frobenius", double(frobenius(tm.A))}}}});
    return exit_ok;
}

// ---------------------------------------------------------------- bench qr

struct QrConfig {
    index_t m = 64, n = 32, batch = 100, panel_width = default_panel_width;
    std::string input;
};

template <typename T>
MatrixBatch<T> gaussian_batch(index_t m, index_t n, index_t count, std::uint64_t seed, const std::string& input) {
    MatrixBatch<T> b;
    if (!input.empty()) {
        b.push_back(load_matrix<T>(input));
        return b;
    }
    for (index_t i = 0; i < count; ++i)
        b.push_back(gaussian_matrix<T>(m, n, derive_seed(seed, static_cast<std::uint64_t>(i))));
    return b;
}

template <typename T>
int run_qr(const QrConfig& q, const Common& c, Sink& sink) {
    const auto batch = gaussian_batch<T>(q.m, q.n, q.batch, c.seed, q.input);
    const auto t0 = clock_type::now();
    const auto res = batch_qr(batch, q.panel_width, c.threads);
    const double elapsed = seconds_since(t0);

    double resid = 0, orth = 0;
    for (std::size_t i = 0; i < batch.count(); ++i) {
        const auto QR = multiply(res[i].Q, res[i].R);
        resid = std::max(resid, double(frobenius_diff(batch[i], QR)) / double(frobenius(batch[i])));
        orth = std::max(orth, double(orthogonality_error(res[i].Q)));
    }
    json cfg = {{"m", batch[0].rows()}, {"n", batch[0].cols()}, {"batch", batch.count()},
                {"panel_width", q.panel_width}, {"input", q.input}};
    cfg.update(common_json(c));
    sink.emit({{"command", "bench qr"},
               {"config", cfg},
               {"metrics", {{"max_residual", resid}, {"max_orthogonality_error", orth}}},
               {"timing", {{"seconds", elapsed}}}});
    return exit_ok;
}

// ---------------------------------------------------------------- bench svd / block-svd

struct SvdConfig {
    index_t m = 32, n = 32, batch = 100, max_sweeps = 30;
    double cond = 1e4;
    std::string mode = "geometric";
    std::string ordering = "serial";
    std::string input;
};

template <typename T>
struct Fixture {
    MatrixBatch<T> batch;
    std::vector<std::vector<T>> sigma; // empty when read from a file
};

template <typename T>
Fixture<T> spectrum_batch(index_t m, index_t n, index_t count, double cond, const std::string& mode,
                          std::uint64_t seed, const std::string& input) {
    Fixture<T> f;
    if (!input.empty()) {
        f.batch.push_back(load_matrix<T>(input));
        return f;
    }
    const SpectrumSpec spec{n, parse_mode(mode), cond, -1, {}};
    for (index_t i = 0; i < count; ++i) {
        auto tm = make_matrix<T>(m, spec, derive_seed(seed, static_cast<std::uint64_t>(i)));
        f.batch.push_back(std::move(tm.A));
        f.sigma.push_back(std::move(tm.sigma));
    }
    return f;
}

template <typename T>
json svd_metrics(const Fixture<T>& f, const std::vector<SvdResult<T>>& res, bool& all_converged) {
    std::vector<int> sweeps;
    std::size_t converged = 0, rotations = 0;
    double resid = 0, serr = 0;
    for (std::size_t i = 0; i < res.size(); ++i) {
        sweeps.push_back(res[i].sweeps);
        converged += res[i].converged ? 1 : 0;
        rotations += res[i].rotations;
        resid = std::max(resid, svd_residual(f.batch[i], res[i]));
        if (!f.sigma.empty())
            serr = std::max(serr, sigma_error(res[i].sigma, f.sigma[i]));
    }
    all_converged = converged == res.size();
    json m = {{"converged", converged},
              {"all_converged", all_converged},
              {"sweeps", sweeps},
              {"rotations", rotations},
              {"max_residual", resid}};
    if (!f.sigma.empty())
        m["max_sigma_rel_error"] = serr;
    return m;
}

template <typename T>
int run_svd(const SvdConfig& s, const Common& c, Sink& sink) {
    const auto f = spectrum_batch<T>(s.m, s.n, s.batch, s.cond, s.mode, c.seed, s.input);
    JacobiOptions<T> opts;
    opts.max_sweeps = static_cast<int>(s.max_sweeps);
    opts.ordering = s.ordering == "round-robin" ? ordering_t::round_robin : ordering_t::serial;
    opts.accumulate_v = true;

    const auto t0 = clock_type::now();
    const auto res = batch_svd(f.batch, opts, c.threads);
    const double elapsed = seconds_since(t0);

    bool ok = true;
    json cfg = {{"m", f.batch[0].rows()}, {"n", f.batch[0].cols()}, {"batch", f.batch.count()},
                {"cond", s.cond},         {"mode", s.mode},        {"ordering", s.ordering},
                {"tolerance", double(opts.tolerance)}, {"max_sweeps", s.max_sweeps}, {"input", s.input}};
    cfg.update(common_json(c));
    sink.emit({{"command", "bench svd"},
               {"config", cfg},
               {"metrics", svd_metrics(f, res, ok)},
               {"timing", {{"seconds", elapsed}}}});
    return c.strict && !ok ? exit_nonconvergence : exit_ok;
}

struct BlockConfig {
    index_t m = 0, n = 128, batch = 10, block_width = 32, max_sweeps = 30;
    double cond = 1e7;
    std::string mode = "geometric";
    std::string method = "direct";
    std::string input;
};

template <typename T>
int run_block(const BlockConfig& b, const Common& c, Sink& sink) {
    const index_t m = b.m > 0 ? b.m : b.n;
    const auto f = spectrum_batch<T>(m, b.n, b.batch, b.cond, b.mode, c.seed, b.input);
    BlockJacobiOptions<T> opts;
    opts.block_width = b.block_width;
    opts.method = b.method == "gram" ? block_method_t::gram : block_method_t::direct;
    opts.max_sweeps = static_cast<int>(b.max_sweeps);
    opts.accumulate_v = true;

    const auto t0 = clock_type::now();
    const auto res = batch_block_svd(f.batch, opts, c.threads);
    const double elapsed = seconds_since(t0);

    bool ok = true;
    auto metrics = svd_metrics(f, res, ok);
    json history = json::array();
    for (const auto& r : res)
        history.push_back(to_double(r.sweep_offdiag));
    metrics["sweep_offdiag"] = history;

    json cfg = {{"m", f.batch[0].rows()},  {"n", f.batch[0].cols()}, {"batch", f.batch.count()},
                {"cond", b.cond},          {"mode", b.mode},         {"method", b.method},
                {"block_width", b.block_width}, {"tolerance", double(opts.tolerance)},
                {"max_sweeps", b.max_sweeps},   {"input", b.input}};
    cfg.update(common_json(c));
    sink.emit({{"command", "bench block-svd"}, {"config", cfg}, {"metrics", metrics}, {"timing", {{"seconds", elapsed}}}});
    return c.strict && !ok ? exit_nonconvergence : exit_ok;
}

// ---------------------------------------------------------------- bench rsvd

struct RsvdConfig {
    index_t m = 256, n = 256, batch = 10, k = 64, p = 8, rank = -1;
    double cond = 1e4;
    std::string mode = "geometric";
};

template <typename T>
int run_rsvd(const RsvdConfig& r, const Common& c, Sink& sink) {
    const index_t rank = r.rank < 0 ? r.k : r.rank;
    const SpectrumSpec spec{r.n, parse_mode(r.mode), r.cond, rank, {}};
    MatrixBatch<T> batch;
    std::vector<std::vector<T>> sigma;
    for (index_t i = 0; i < r.batch; ++i) {
        auto tm = make_matrix<T>(r.m, spec, derive_seed(c.seed, static_cast<std::uint64_t>(i)));
        batch.push_back(std::move(tm.A));
        sigma.push_back(std::move(tm.sigma));
    }
    RsvdOptions<T> opts;
    opts.k = r.k;
    opts.p = r.p;
    opts.seed = c.seed;

    const auto t0 = clock_type::now();
    const auto res = batch_rsvd(batch, opts, c.threads);
    const double elapsed = seconds_since(t0);

    double err = 0, ratio = 0;
    std::size_t converged = 0;
    for (std::size_t i = 0; i < res.size(); ++i) {
        const double nrm = double(frobenius(batch[i]));
        err = std::max(err, double(frobenius_diff(batch[i], res[i].reconstruct())) / nrm);
        double tail = 0;
        for (std::size_t j = static_cast<std::size_t>(r.k); j < sigma[i].size(); ++j)
            tail += double(sigma[i][j]) * double(sigma[i][j]);
        const double got = double(frobenius_diff(batch[i], res[i].reconstruct()));
        if (tail > 0)
            ratio = std::max(ratio, got / std::sqrt(tail));
        converged += res[i].converged ? 1 : 0;
    }
    const bool ok = converged == res.size();
    json cfg = {{"m", r.m}, {"n", r.n}, {"batch", r.batch}, {"k", r.k}, {"p", r.p}, {"rank", rank},
                {"cond", r.cond}, {"mode", r.mode}};
    cfg.update(common_json(c));
    sink.emit({{"command", "bench rsvd"},
               {"config", cfg},
               {"metrics",
                {{"converged", converged},
                 {"all_converged", ok},
                 {"max_rel_reconstruction_error", err},
                 {"max_error_over_optimal_rank_k", ratio}}},
               {"timing", {{"seconds", elapsed}}}});
    return c.strict && !ok ? exit_nonconvergence : exit_ok;
}

// ---------------------------------------------------------------- compress

struct CompressConfig {
    index_t n = 4096, cheb_order = 8, leaf_size = 64, samples = 32, error_samples = 30;
    double ell = 0.1, eta = h2::H2Params{}.eta, eps = 1e-7;
    std::string svd = "full";
};

json memory_json(const h2::MemoryReport& m) {
    return {{"dense_bytes", m.dense_bytes},
            {"basis_bytes", m.basis_bytes},
            {"coupling_bytes", m.coupling_bytes},
            {"lowrank_bytes", m.lowrank_bytes()},
            {"total_bytes", m.total_bytes()}};
}

template <typename T>
int run_compress(const CompressConfig& k, const Common& c, Sink& sink) {
    const auto pts = h2::perturbed_grid(k.n, c.seed);
    h2::H2Params params{k.ell, k.cheb_order, k.eta, k.leaf_size};

    auto t0 = clock_type::now();
    const auto H = h2::build_h2<T>(pts, params, c.threads);
    const double build_seconds = seconds_since(t0);

    h2::TruncationOptions opts;
    opts.svd = k.svd == "rsvd" ? h2::truncation_svd_t::randomized : h2::truncation_svd_t::full;
    opts.samples = k.samples;
    opts.seed = c.seed;
    const auto res = h2::compress(H, k.eps, opts, c.threads);

    t0 = clock_type::now();
    const double err = h2::estimate_relative_error(H, res.H, static_cast<int>(k.error_samples),
                                                   derive_seed(c.seed, 0xe77), c.threads);
    const double nest = h2::compressed_nesting_residual(H, res.H, res.projection, c.threads);
    const double verify_seconds = seconds_since(t0);

    json cfg = {{"n", k.n},
                {"ell", k.ell},
                {"cheb_order", k.cheb_order},
                {"leaf_size", k.leaf_size},
                {"eta", k.eta},
                {"eps", k.eps},
                {"svd", k.svd},
                {"samples", k.samples},
                {"error_samples", k.error_samples}};
    cfg.update(common_json(c));
    std::size_t dense = 0, lowrank = 0;
    for (const auto& b : H.blocks.blocks)
        (b.kind == h2::block_kind::dense ? dense : lowrank) += 1;
    sink.emit({{"command", "compress"},
               {"config", cfg},
               {"metrics",
                {{"levels", H.tree.depth()},
                 {"dense_blocks", dense},
                 {"lowrank_blocks", lowrank},
                 {"ranks_before", res.ranks_before},
                 {"ranks_after", res.ranks_after},
                 {"memory_before", memory_json(h2::memory_report(H))},
                 {"memory_after", memory_json(h2::memory_report(res.H))},
                 {"error_estimate", err},
                 {"nesting_residual", nest}}},
               {"timing",
                {{"build_seconds", build_seconds},
                 {"truncation_seconds", res.truncation_seconds},
                 {"projection_seconds", res.projection_seconds},
                 {"verify_seconds", verify_seconds}}}});
    return exit_ok;
}

template <template <typename> class Fn, typename Cfg>
int dispatch(const Cfg& cfg, const Common& c, Sink& sink) {
    if (c.precision == "f32")
        return Fn<float>{}(cfg, c, sink);
    return Fn<double>{}(cfg, c, sink);
}

#define BATCHFACT_RUNNER(name, fn, Cfg)                                                                   \
    template <typename T>                                                                                 \
    struct name {                                                                                         \
        int operator()(const Cfg& cfg, const Common& c, Sink& sink) const { return fn<T>(cfg, c, sink); } \
    };

BATCHFACT_RUNNER(GenRunner, run_gen, GenConfig)
BATCHFACT_RUNNER(QrRunner, run_qr, QrConfig)
BATCHFACT_RUNNER(SvdRunner, run_svd, SvdConfig)
BATCHFACT_RUNNER(BlockRunner, run_block, BlockConfig)
BATCHFACT_RUNNER(RsvdRunner, run_rsvd, RsvdConfig)
BATCHFACT_RUNNER(CompressRunner, run_compress, CompressConfig)

void add_common(CLI::App* app, Common& c, bool with_strict) {
    app->add_option("--threads", c.threads, "worker threads (default: BATCHFACT_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--precision", c.precision, "element precision")->check(CLI::IsMember({"f32", "f64"}));
    app->add_option("--seed", c.seed, "random seed");
    app->add_option("--report", c.report, "write JSON lines to this file instead of stdout");
    if (with_strict)
        app->add_flag("--strict", c.strict, "exit with status 2 if any entry fails to converge");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Batched QR, Jacobi SVD, randomized SVD and H2 compression", "batchfact"};
    app.require_subcommand(1);

    Common common;
    GenConfig gen;
    QrConfig qr;
    SvdConfig svd;
    BlockConfig block;
    RsvdConfig rs;
    CompressConfig comp;

    auto* g = app.add_subcommand("gen", "generate a matrix with a prescribed spectrum");
    add_common(g, common, false);
    g->add_option("--m", gen.m)->check(CLI::PositiveNumber);
    g->add_option("--n", gen.n)->check(CLI::PositiveNumber);
    g->add_option("--cond", gen.cond)->check(CLI::Range(1.0, 1e300));
    g->add_option("--mode", gen.mode)->check(CLI::IsMember({"geometric", "arithmetic"}));
    g->add_option("--rank", gen.rank, "number of nonzero singular values (default: n)");
    g->add_option("--out", gen.out, "matrix file (text format)");

    auto* bench = app.add_subcommand("bench", "batched factorization benchmarks");
    bench->require_subcommand(1);

    auto* bq = bench->add_subcommand("qr", "batched Householder QR");
    add_common(bq, common, false);
    bq->add_option("--m", qr.m)->check(CLI::PositiveNumber);
    bq->add_option("--n", qr.n)->check(CLI::PositiveNumber);
    bq->add_option("--batch", qr.batch)->check(CLI::PositiveNumber);
    bq->add_option("--panel-width", qr.panel_width)->check(CLI::PositiveNumber);
    bq->add_option("--input", qr.input, "factor a single matrix read from this file")->check(CLI::ExistingFile);

    auto* bs = bench->add_subcommand("svd", "batched one-sided Jacobi SVD");
    add_common(bs, common, true);
    bs->add_option("--m", svd.m)->check(CLI::PositiveNumber);
    bs->add_option("--n", svd.n)->check(CLI::PositiveNumber);
    bs->add_option("--batch", svd.batch)->check(CLI::PositiveNumber);
    bs->add_option("--cond", svd.cond)->check(CLI::Range(1.0, 1e300));
    bs->add_option("--mode", svd.mode)->check(CLI::IsMember({"geometric", "arithmetic"}));
    bs->add_option("--ordering", svd.ordering)->check(CLI::IsMember({"serial", "round-robin"}));
    bs->add_option("--max-sweeps", svd.max_sweeps)->check(CLI::PositiveNumber);
    bs->add_option("--input", svd.input, "decompose a single matrix read from this file")->check(CLI::ExistingFile);

    auto* bb = bench->add_subcommand("block-svd", "batched block Jacobi SVD");
    add_common(bb, common, true);
    bb->add_option("--m", block.m, "rows (default: n)")->check(CLI::NonNegativeNumber);
    bb->add_option("--n", block.n)->check(CLI::PositiveNumber);
    bb->add_option("--batch", block.batch)->check(CLI::PositiveNumber);
    bb->add_option("--cond", block.cond)->check(CLI::Range(1.0, 1e300));
    bb->add_option("--mode", block.mode)->check(CLI::IsMember({"geometric", "arithmetic"}));
    bb->add_option("--method", block.method)->check(CLI::IsMember({"gram", "direct"}));
    bb->add_option("--block-width", block.block_width)->check(CLI::PositiveNumber);
    bb->add_option("--max-sweeps", block.max_sweeps)->check(CLI::PositiveNumber);
    bb->add_option("--input", block.input, "decompose a single matrix read from this file")->check(CLI::ExistingFile);

    auto* br = bench->add_subcommand("rsvd", "batched randomized SVD");
    add_common(br, common, true);
    br->add_option("--m", rs.m)->check(CLI::PositiveNumber);
    br->add_option("--n", rs.n)->check(CLI::PositiveNumber);
    br->add_option("--batch", rs.batch)->check(CLI::PositiveNumber);
    br->add_option("--k", rs.k)->check(CLI::PositiveNumber);
    br->add_option("--p", rs.p)->check(CLI::NonNegativeNumber);
    br->add_option("--rank", rs.rank, "nonzero singular values of the test matrices (default: k)");
    br->add_option("--cond", rs.cond)->check(CLI::Range(1.0, 1e300));
    br->add_option("--mode", rs.mode)->check(CLI::IsMember({"geometric", "arithmetic"}));

    auto* cp = app.add_subcommand("compress", "build and compress an H2 covariance matrix");
    add_common(cp, common, false);
    cp->add_option("--n", comp.n)->check(CLI::PositiveNumber);
    cp->add_option("--ell", comp.ell)->check(CLI::PositiveNumber);
    cp->add_option("--cheb-order", comp.cheb_order)->check(CLI::PositiveNumber);
    cp->add_option("--leaf-size", comp.leaf_size)->check(CLI::PositiveNumber);
    cp->add_option("--eta", comp.eta)->check(CLI::PositiveNumber);
    cp->add_option("--eps", comp.eps)->check(CLI::PositiveNumber);
    cp->add_option("--svd", comp.svd)->check(CLI::IsMember({"full", "rsvd"}));
    cp->add_option("--samples", comp.samples, "randomized SVD samples per node")->check(CLI::PositiveNumber);
    cp->add_option("--error-samples", comp.error_samples, "random vectors for the error estimate")
        ->check(CLI::PositiveNumber);

    if (argc < 2) {
        std::cerr << app.help();
        return exit_usage;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (common.threads > 0)
            set_num_threads(common.threads);
        Sink sink(common.report);
        if (g->parsed())
            return dispatch<GenRunner>(gen, common, sink);
        if (bq->parsed())
            return dispatch<QrRunner>(qr, common, sink);
        if (bs->parsed())
            return dispatch<SvdRunner>(svd, common, sink);
        if (bb->parsed())
            return dispatch<BlockRunner>(block, common, sink);
        if (br->parsed())
            return dispatch<RsvdRunner>(rs, common, sink);
        if (cp->parsed())
            return dispatch<CompressRunner>(comp, common, sink);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_usage;
}
