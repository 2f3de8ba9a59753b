// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "bcsd_oracle.hpp"
#include "experiment.hpp"
#include "sdown/gradcheck.hpp"
#include "sdown/metrics.hpp"
#include "sdown/ops.hpp"
#include "sdown/temporal_encoding.hpp"
#include "sdown/temporal_module.hpp"
#include "test_util.hpp"

using namespace sdown;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// 1. Gradient correctness ----------------------------------------------------

Verdict gradients() {
  Verdict v;
  const auto t0 = Clock::now();
  GradCheckOptions o;
  o.tol = 1e-3;
  double worst = 0;
  std::size_t checks = 0, skipped = 0;
  auto run = [&](const std::string& name, const Fragment& f, const Grid4<double>& x, ParamSet<double>* ps,
                 GradCheckOptions opts) {
    opts.tol = 1e-3;
    const auto r = grad_check(f, x, ps, opts);
    worst = std::max(worst, r.max_rel_error);
    checks += r.checked;
    skipped += r.skipped_kinks;
    v.require(r.finite && r.checked > 0 && r.max_rel_error <= 1e-3,
              name + " rel err " + fmt("%.3g", r.max_rel_error) + " " + r.worst + r.diagnostic);
  };
  auto layer = [](LayerParams<double> p, std::uint64_t seed) {
    test::randomize(p, seed, 0.5);
    ParamSet<double> ps;
    ps.add(std::move(p));
    return ps;
  };
  Rng rng(1);
  auto conv = layer(make_conv<double>("c", 3, 3, 2, 3, rng), 1);
  run("conv2d same", [&](Tape<double>& t, Var x) { return ops::conv2d(t, x, conv[0]); },
      test::random_grid({2, 5, 4, 2}, 1), &conv, o);
  auto conv_even = layer(make_conv<double>("c", 2, 4, 2, 2, rng), 2);
  run("conv2d valid", [&](Tape<double>& t, Var x) { return ops::conv2d(t, x, conv_even[0], ops::Padding::valid); },
      test::random_grid({1, 5, 6, 2}, 2), &conv_even, o);
  auto dense = layer(make_dense<double>("d", 6, 4, rng), 3);
  run("dense", [&](Tape<double>& t, Var x) { return ops::dense(t, x, dense[0]); },
      test::random_grid({3, 1, 1, 6}, 3), &dense, o);
  run("relu", [](Tape<double>& t, Var x) { return ops::relu(t, x); }, test::random_grid({2, 3, 3, 2}, 4), nullptr, o);
  run("max_pool2", [](Tape<double>& t, Var x) { return ops::max_pool2(t, x); }, test::random_grid({2, 4, 6, 2}, 5),
      nullptr, o);
  run("bilinear up", [](Tape<double>& t, Var x) { return ops::bilinear_resize(t, x, 7, 9); },
      test::random_grid({1, 3, 4, 2}, 6), nullptr, o);
  run("bilinear down", [](Tape<double>& t, Var x) { return ops::bilinear_resize(t, x, 2, 3); },
      test::random_grid({1, 5, 7, 1}, 7), nullptr, o);
  run("pixel_shuffle", [](Tape<double>& t, Var x) { return ops::pixel_shuffle(t, x, 2); },
      test::random_grid({1, 2, 3, 8}, 8), nullptr, o);
  run("space_to_depth", [](Tape<double>& t, Var x) { return ops::space_to_depth(t, x, 2); },
      test::random_grid({1, 4, 6, 2}, 9), nullptr, o);
  run("concat/add/reshape",
      [&](Tape<double>& t, Var x) {
        auto y = ops::conv2d(t, x, conv[0]);
        auto c = ops::concat_channels(t, x, y);
        return ops::reshape(t, ops::add(t, c, c), {2, 1, 1, 5 * 4 * 5});
      },
      test::random_grid({2, 5, 4, 2}, 10), &conv, o);
  GradCheckOptions train = o;
  train.mode = Mode::train;
  run("dropout", [](Tape<double>& t, Var x) { return ops::dropout(t, x, 0.3); }, test::random_grid({1, 4, 4, 3}, 11),
      nullptr, train);
  auto truth = test::random_grid({1, 3, 4, 1}, 12);
  truth[1] = std::nan("");
  run("masked_mse", [&](Tape<double>& t, Var x) { return ops::masked_mse(t, x, truth); },
      test::random_grid({1, 3, 4, 1}, 13), nullptr, o);

  for (auto kind : {EncodingKind::sinusoidal, EncodingKind::rbf}) {
    TemporalModuleSpec spec;
    spec.encoding.kind = kind;
    spec.encoding.resolution_levels = {3, 5};
    spec.hidden_layers = {6};
    spec.cnn_filters = {2};
    spec.cnn_kernels = {{3, 3}};
    spec.fusion_h = 3;
    spec.fusion_w = 2;
    ParamSet<double> ps;
    Rng r2(4);
    TemporalModule<double> tm(spec, ps, r2, "tm");
    const std::vector<double> times{10, 100, 200};
    GradCheckOptions po = o;
    po.check_input = false;
    run(std::string("temporal module ") + (kind == EncodingKind::rbf ? "rbf" : "sin"),
        [&](Tape<double>& t, Var) { return tm.forward(t, ps, times); }, Grid4<double>({1, 1, 1, 1}), &ps, po);
  }

  for (bool temporal : {false, true}) {
    TemporalModuleSpec tm;
    tm.encoding.kind = EncodingKind::sinusoidal;
    tm.hidden_layers = {4};
    tm.cnn_filters = {2};
    tm.cnn_kernels = {{3, 3}};

    SrdrnSpec s;
    s.num_residual_blocks = 1;
    s.res_block_filters = 4;
    s.upscale_factor = 2;
    s.upscaling_filters = {4};
    s.coarse_h = s.coarse_w = 6;
    if (temporal) s.temporal = tm;
    Srdrn<double> srdrn(s);
    const std::vector<double> times{5, 180};
    const std::span<const double> ts = temporal ? std::span<const double>(times) : std::span<const double>();
    run(std::string("SRDRN 6x6") + (temporal ? " time-aware" : ""),
        [&](Tape<double>& t, Var x) { return srdrn.forward(t, x, ts); }, test::random_grid({2, 6, 6, 1}, 14),
        &srdrn.params(), o);

    UnetSpec u;
    u.target_h = u.target_w = 8;
    u.initial_filters = 4;
    u.encoder_filters = {4};
    if (temporal) u.temporal = tm;
    Unet<double> unet(u);
    run(std::string("UNet 8x8") + (temporal ? " time-aware" : ""),
        [&](Tape<double>& t, Var x) { return unet.forward(t, x, ts); }, test::random_grid({2, 4, 4, 1}, 15),
        &unet.params(), o);
  }
  const double secs = seconds_since(t0);
  v.require(secs < 120, "suite took " + fmt("%.1f", secs) + " s");
  v.detail = "max rel err " + fmt("%.2e", worst) + " over " + std::to_string(checks) + " probes (" +
             std::to_string(skipped) + " kink-crossing skipped), " + fmt("%.1f", secs) + " s" +
             (v.detail.empty() ? "" : "; " + v.detail);
  return v;
}

// 2. Shape contracts ----------------------------------------------------------

Verdict shapes() {
  Verdict v;
  SrdrnSpec s;
  s.num_residual_blocks = 1;
  s.res_block_filters = 4;
  s.upscaling_filters = {4, 4};
  Srdrn<float> net(s);
  Tape<float> tape;
  const auto y = net.forward(tape, tape.leaf(Grid4<float>({3, 30, 30, 1}, 0.1f)), {});
  v.require(tape.value(y).shape() == Shape4{3, 120, 120, 1}, "SRDRN output " + tape.value(y).shape().str());
  v.require(s.num_upsampling_blocks() == 2, "n_B for r=4");
  for (std::size_t r : {2, 4, 8}) {
    SrdrnSpec sr;
    sr.upscale_factor = r;
    v.require(sr.num_upsampling_blocks() == static_cast<std::size_t>(std::log2(static_cast<double>(r))),
              "n_B for r=" + std::to_string(r));
  }
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> d(1, 6), rr(1, 4), cc(1, 3);
  std::size_t ok = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t r = rr(rng);
    const auto x = test::random_grid({d(rng), d(rng), d(rng), cc(rng) * r * r}, rng());
    const auto up = ops::pixel_shuffle(x, r);
    const bool shape_ok = up.shape() == Shape4{x.n(), x.h() * r, x.w() * r, x.c() / (r * r)};
    if (shape_ok && ops::space_to_depth(up, r).vec() == x.vec()) ++ok;
  }
  v.require(ok == 100, std::to_string(ok) + "/100 shuffle round trips");
  v.detail = "(3,30,30,1)->(3,120,120,1), n_B=log2 r for r in {2,4,8}, " + std::to_string(ok) +
             "/100 shuffle round trips" + (v.pass ? "" : "; " + v.detail);
  return v;
}

// 3. Temporal encoding ---------------------------------------------------------

Verdict temporal_encoding() {
  Verdict v;
  const auto basis = build_rbf_basis({9, 17, 37}, 365);
  v.require(basis.size() == 63, "basis size " + std::to_string(basis.size()));
  std::size_t k = 0, decay_checks = 0;
  for (std::size_t j = 0; j < basis.nodes.size(); ++j)
    for (double o : basis.nodes[j]) {
      const std::size_t idx = k++;
      v.require(encode_rbf(o, basis, false, 365)[idx] == 1.0, "v(o) != 1 at node " + std::to_string(idx));
      for (double side : {-1.0, 1.0}) {
        double prev = 1.0;
        // Strictly decreasing until the response underflows to zero.
        for (double d = 0.25; d < 365 && prev > 0; d += 0.25) {
          const double cur = encode_rbf(o + side * d, basis, false, 365)[idx];
          v.require(cur < prev, "decay not strict at node " + std::to_string(idx));
          prev = cur;
          ++decay_checks;
        }
      }
    }
  std::size_t period_checks = 0;
  for (double t = -400; t <= 1200; t += 0.125)
    for (int m : {1, 2, 3}) {
      const auto a = encode_sinusoidal(t, 365), b = encode_sinusoidal(t + m * 365.0, 365);
      v.require(a.g1 == b.g1 && a.g2 == b.g2, "sin encode not period invariant at t=" + fmt("%g", t));
      ++period_checks;
    }
  v.require(encode_rbf(366, basis, true, 365) == encode_rbf(1, basis, true, 365), "wrapped encode(366) != encode(1)");
  v.detail = "63 basis functions, v(o)=1 at all nodes, " + std::to_string(decay_checks) + " strict-decay steps, " +
             std::to_string(period_checks) + " exact period checks, encode(366)==encode(1)" +
             (v.pass ? "" : "; " + v.detail);
  return v;
}

// 4. Metrics --------------------------------------------------------------------

Verdict metrics() {
  Verdict v;
  const double target = 1 - std::sqrt(2.0);
  const std::vector<float> obs{1, 2, 3, 4};
  const auto perfect = evaluate(obs, obs);
  v.require(perfect.kge == 1.0 && perfect.mae == 0.0 && perfect.rmse == 0.0, "perfect prediction");
  const std::vector<float> mean(4, 2.5f);
  const double mean_kge = evaluate(mean, obs).kge;
  v.require(std::abs(mean_kge - target) <= 1e-9, "mean predictor KGE " + fmt("%.12g", mean_kge));
  const std::vector<float> doubled{2, 4, 6, 8};
  const double scaled_kge = evaluate(doubled, obs).kge;
  v.require(std::abs(scaled_kge - target) <= 1e-9, "2*obs KGE " + fmt("%.12g", scaled_kge));
  v.detail = "perfect KGE=1 MAE=RMSE=0, mean KGE " + fmt("%.12f", mean_kge) + ", 2*obs KGE " +
             fmt("%.12f", scaled_kge) + (v.pass ? "" : "; " + v.detail);
  return v;
}

// 5. BCSD oracle ------------------------------------------------------------------

Verdict bcsd() {
  Verdict v;
  double worst = 0, worst_identity = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t ch = 1 + rng() % 2, cw = 1 + rng() % 2, s = 1 + rng() % 3, steps = 1 + rng() % 20;
    std::vector<std::int64_t> times(steps);
    for (std::size_t i = 0; i < steps; ++i) times[i] = static_cast<std::int64_t>(i + 1);
    GridSeries coarse(ch, cw, times), fine(ch * s, cw * s, times);
    std::uniform_int_distribution<int> q(0, 1600);
    for (auto& x : coarse.data) x = static_cast<float>(q(rng)) / 16.0f;
    for (auto& x : fine.data) x = static_cast<float>(q(rng)) / 16.0f;
    BcsdConfig cfg;
    cfg.n_quantiles = std::vector<std::size_t>{1, 4, 10, 100}[rng() % 4];
    cfg.extrapolate = rng() % 2 == 0;
    cfg.normalize = false;
    const auto model = bcsd_fit(coarse, fine, cfg);
    const GridSeries target = block_coarsen(fine, s);

    Grid4<double> x({5, ch, cw, 1});
    std::uniform_real_distribution<double> u(-10, 110);
    for (auto& e : x.vec()) e = u(rng);
    const auto pred = bcsd_predict(model, x);
    for (std::size_t k = 0; k < 5; ++k) {
      std::vector<double> corrected(ch * cw);
      for (std::size_t p = 0; p < ch * cw; ++p) {
        std::vector<double> cs, ts;
        for (std::size_t t = 0; t < steps; ++t) {
          cs.push_back(coarse.data[t * ch * cw + p]);
          ts.push_back(target.data[t * ch * cw + p]);
        }
        corrected[p] = test::oracle_map(cs, ts, cfg.n_quantiles, x[k * ch * cw + p], cfg.extrapolate);
      }
      for (std::size_t yy = 0; yy < ch * s; ++yy)
        for (std::size_t xx = 0; xx < cw * s; ++xx)
          worst = std::max(worst, std::abs(pred.at(k, yy, xx, 0) -
                                           test::oracle_bilinear(corrected, ch, cw, ch * s, cw * s, yy, xx)));
    }

    // Identity: the fine field repeats the coarse one over each block.
    GridSeries same(ch * s, cw * s, times);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t yy = 0; yy < ch * s; ++yy)
        for (std::size_t xx = 0; xx < cw * s; ++xx) same.at(t, yy, xx) = coarse.at(t, yy / s, xx / s);
    // Clamping replaces out-of-range inputs by design, so identity is checked with the default shift.
    BcsdConfig icfg = cfg;
    icfg.extrapolate = true;
    icfg.normalize = seed % 2 == 0;
    const auto id = bcsd_fit(coarse, same, icfg);
    const auto ipred = bcsd_predict(id, x);
    const auto plain = ops::bilinear(x, ch * s, cw * s);
    for (std::size_t i = 0; i < plain.size(); ++i) worst_identity = std::max(worst_identity, std::abs(ipred[i] - plain[i]));
  }
  v.require(worst <= 1e-9, "oracle max abs diff " + fmt("%.3g", worst));
  v.require(worst_identity <= 1e-9, "identity max abs diff " + fmt("%.3g", worst_identity));
  v.detail = "200 instances (<=4 cells, <=20 steps): oracle max diff " + fmt("%.2e", worst) + ", identity max diff " +
             fmt("%.2e", worst_identity) + (v.pass ? "" : "; " + v.detail);
  return v;
}

// 6 and 7. Desk-scale experiment ------------------------------------------------------

struct ExperimentOutcome {
  Verdict ordering, convergence;
};

ExperimentOutcome desk_experiment() {
  using namespace sdown::experiment;
  const Setup setup;
  const auto t0 = Clock::now();
  int ordering_ok = 0, convergence_ok = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SeedResult r = run_seed(setup, seed);
    const bool ord = ordering_holds(r);
    const bool conv = converges_faster(r.unet[0], r.unet[1]) && converges_faster(r.unet[0], r.unet[2]);
    ordering_ok += ord;
    convergence_ok += conv;
    const double target = r.unet[0].val_curve.back();
    std::printf(
        "  seed %llu: MAE bcsd %.4f | srdrn base %.4f sin %.4f rbf %.4f | unet base %.4f sin %.4f rbf %.4f | "
        "unet reaches baseline final val loss at epoch sin %zu rbf %zu of %zu\n",
        static_cast<unsigned long long>(seed), r.bcsd_mae, r.srdrn[0].test_mae, r.srdrn[1].test_mae,
        r.srdrn[2].test_mae, r.unet[0].test_mae, r.unet[1].test_mae, r.unet[2].test_mae,
        first_epoch_reaching(r.unet[1].val_curve, target), first_epoch_reaching(r.unet[2].val_curve, target),
        r.unet[0].val_curve.size());
    std::fflush(stdout);
  }
  const double secs = seconds_since(t0);
  ExperimentOutcome out;
  out.ordering.require(ordering_ok >= 4, "ordering held in " + std::to_string(ordering_ok) + "/5 seeds");
  out.ordering.require(secs < 1800, "runtime " + fmt("%.0f", secs) + " s");
  out.ordering.detail = "ordering held in " + std::to_string(ordering_ok) + "/5 seeds, " + fmt("%.0f", secs) +
                        " s total" + (out.ordering.pass ? "" : "; " + out.ordering.detail);
  out.convergence.require(convergence_ok >= 4, "faster convergence in " + std::to_string(convergence_ok) + "/5 seeds");
  out.convergence.detail = "sin and rbf UNet reach the baseline's final val loss within half the budget in " +
                           std::to_string(convergence_ok) + "/5 seeds" +
                           (out.convergence.pass ? "" : "; " + out.convergence.detail);
  return out;
}

// 8. Determinism through the CLI ---------------------------------------------------

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

// Trace rows without the wall-clock column.
std::string trace_losses(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

Verdict determinism() {
  Verdict v;
  const fs::path dir = fs::temp_directory_path() / ("sdown_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string cli = SDOWN_CLI_PATH;
  auto p = [&](const std::string& n) { return (dir / n).string(); };
  v.require(shell(cli + " synth --out " + p("fine.sdg") + " --rows 16 --cols 16 --steps 60 --season_period 30") == 0,
            "synth failed");
  v.require(shell(cli + " coarsen --in " + p("fine.sdg") + " --out " + p("coarse.sdg") + " --factor 4") == 0,
            "coarsen failed");
  const std::string data = " --coarse " + p("coarse.sdg") + " --fine " + p("fine.sdg");
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"srdrn", " --model srdrn --time-points --cyclical_period 30 --num_residual_blocks 1 --num_res_block_filters 8"
                " --upscaling_filters 8,4 --temporal_layers 8,16 --epochs 3 --batch_size 8 --validation_split 0.2"},
      {"unet", " --model unet --time-points --cos_sin_transform true --cyclical_period 30 --initial_filters 4"
               " --filters 4,8 --dropout_rate 0.2 --temporal_layers 8 --epochs 3 --batch_size 8"},
      {"bcsd", " --model bcsd --n_quantiles 20"},
  };
  std::size_t identical = 0;
  for (const auto& [name, flags] : runs) {
    for (const char* tag : {"a", "b"}) {
      const std::string out = p(name + tag + ".sdm");
      v.require(shell(cli + " train" + data + flags + " --seed 11 --out " + out) == 0, name + " train failed");
    }
    const bool model_same = slurp(p(name + "a.sdm")) == slurp(p(name + "b.sdm")) && !slurp(p(name + "a.sdm")).empty();
    const bool trace_same = trace_losses(slurp(p(name + "a.sdm.trace.csv"))) ==
                            trace_losses(slurp(p(name + "b.sdm.trace.csv")));
    v.require(model_same, name + " model files differ");
    v.require(trace_same, name + " traces differ");
    identical += model_same && trace_same;
  }
  fs::remove_all(dir);
  v.detail = std::to_string(identical) + "/3 models (time-aware SRDRN, time-aware UNet with dropout, BCSD) " +
             "bit-identical across two runs; trace epoch/train_loss/val_loss identical" +
             (v.pass ? "" : "; " + v.detail);
  return v;
}

// 9. Data plumbing ------------------------------------------------------------------

Verdict plumbing() {
  Verdict v;
  std::mt19937_64 rng(99);
  std::size_t roundtrips = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t h = 1 + rng() % 9, w = 1 + rng() % 9, n = rng() % 6;
    std::vector<std::int64_t> times(n);
    for (std::size_t i = 0; i < n; ++i) times[i] = static_cast<std::int64_t>(i * 3) - 7;
    GridSeries s(h, w, times);
    for (auto& x : s.data) {
      const auto bits = static_cast<std::uint32_t>(rng());
      x = rng() % 4 == 0 ? std::numeric_limits<float>::quiet_NaN() : std::bit_cast<float>(bits);
    }
    std::stringstream buf;
    write_grid(buf, s);
    const auto r = read_grid(buf);
    bool same = r.h == h && r.w == w && r.times == times && r.data.size() == s.data.size();
    for (std::size_t i = 0; same && i < s.data.size(); ++i)
      same = std::bit_cast<std::uint32_t>(r.data[i]) == std::bit_cast<std::uint32_t>(s.data[i]);
    v.require(same, "grid round trip differs in trial " + std::to_string(trial));
    roundtrips += same;
  }
  std::size_t linear_ok = 0, const_ok = 0;
  std::uniform_real_distribution<double> coef(-2, 2);
  std::uniform_real_distribution<float> val(-50, 50);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t s = 1 + rng() % 4, h = s * (1 + rng() % 4), w = s * (1 + rng() % 4), n = 1 + rng() % 3;
    std::vector<std::int64_t> times(n);
    for (std::size_t i = 0; i < n; ++i) times[i] = static_cast<std::int64_t>(i);
    GridSeries a(h, w, times), b(h, w, times), mix(h, w, times);
    for (auto& x : a.data) x = val(rng);
    for (auto& x : b.data) x = val(rng);
    const double ca = coef(rng), cb = coef(rng);
    for (std::size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = static_cast<float>(ca * a.data[i] + cb * b.data[i]);
    const auto cm = block_coarsen(mix, s), c1 = block_coarsen(a, s), c2 = block_coarsen(b, s);
    bool lin = true;
    // Float storage: tolerance scaled to the float epsilon of the operands.
    for (std::size_t i = 0; i < cm.data.size(); ++i)
      lin = lin && std::abs(cm.data[i] - (ca * c1.data[i] + cb * c2.data[i])) <= 1e-4 * (1 + std::abs(cm.data[i]));
    linear_ok += lin;
    const float k = val(rng);
    const auto cc = block_coarsen(GridSeries(h, w, times, k), s);
    bool cst = true;
    for (float x : cc.data) cst = cst && std::abs(x - k) <= 4 * std::numeric_limits<float>::epsilon() * std::abs(k);
    const_ok += cst;
  }
  v.require(linear_ok == 1000, "linearity " + std::to_string(linear_ok) + "/1000");
  v.require(const_ok == 1000, "constant preservation " + std::to_string(const_ok) + "/1000");
  v.detail = std::to_string(roundtrips) + "/50 bit-exact GridFile round trips with NaN, linearity " +
             std::to_string(linear_ok) + "/1000, constants " + std::to_string(const_ok) + "/1000" +
             (v.pass ? "" : "; " + v.detail);
  return v;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Verdict& v) {
    std::printf("criterion %d %s: %s (%s)\n", id, name, v.pass ? "PASS" : "FAIL", v.detail.c_str());
    std::fflush(stdout);
    failures += !v.pass;
  };
  report(1, "gradient correctness", gradients());
  report(2, "shape contracts", shapes());
  report(3, "temporal encoding", temporal_encoding());
  report(4, "metrics", metrics());
  report(5, "bcsd oracle equivalence", bcsd());
  const auto exp = desk_experiment();
  report(6, "desk-scale MAE ordering", exp.ordering);
  report(7, "faster UNet convergence", exp.convergence);
  report(8, "determinism", determinism());
  report(9, "data plumbing", plumbing());
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
