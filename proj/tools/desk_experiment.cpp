// Runs the desk-scale BCSD / SRDRN / UNet comparison for a range of seeds and
// prints test MAE per method plus the ordering and convergence checks.

#include <CLI11.hpp>

#include <cstdio>

#include "../tests/experiment.hpp"

using namespace sdown;
using namespace sdown::experiment;

int main(int argc, char** argv) {
  Setup s;
  std::uint64_t first_seed = 1;
  std::size_t n_seeds = 5;
  std::string models = "all";
  CLI::App app{"desk-scale downscaling comparison on synthetic seasonal fields"};
  app.option_defaults()->always_capture_default();
  app.add_option("--first_seed", first_seed, "first seed");
  app.add_option("--seeds", n_seeds, "number of seeds");
  app.add_option("--srdrn_epochs", s.srdrn_epochs, "SRDRN epochs");
  app.add_option("--unet_epochs", s.unet_epochs, "UNet epochs");
  app.add_option("--srdrn_blocks", s.srdrn_blocks, "SRDRN residual blocks");
  app.add_option("--srdrn_filters", s.srdrn_filters, "SRDRN residual filters");
  app.add_option("--srdrn_up", s.srdrn_up, "SRDRN upscaling filters")->delimiter(',');
  app.add_option("--unet_initial", s.unet_initial, "UNet initial filters");
  app.add_option("--unet_filters", s.unet_filters, "UNet level filters")->delimiter(',');
  app.add_option("--unet_bottleneck", s.unet_bottleneck, "UNet bottleneck filters");
  app.add_option("--temporal_layers", s.temporal_layers, "temporal hidden layers")->delimiter(',');
  app.add_option("--temporal_filters", s.temporal_filters, "temporal CNN filters")->delimiter(',');
  app.add_option("--learning_rate", s.learning_rate, "learning rate");
  app.add_option("--batch_size", s.batch_size, "batch size");
  app.add_option("--noise", s.synth.noise_amplitude, "noise amplitude");
  app.add_option("--detail", s.synth.detail_amplitude, "detail amplitude");
  app.add_option("--seasonal", s.synth.seasonal_amplitude, "seasonal amplitude");
  app.add_option("--static", s.synth.static_amplitude, "static amplitude");
  app.add_option("--trend", s.synth.trend, "trend");
  app.add_option("--n_bumps", s.synth.n_bumps, "Gaussian bumps per broad pattern");
  app.add_option("--static_width_min", s.synth.static_width_min, "static bump width, fraction of extent");
  app.add_option("--static_width_max", s.synth.static_width_max, "static bump width, fraction of extent");
  app.add_option("--noise_length", s.synth.noise_length, "noise smoothing length");
  CLI11_PARSE(app, argc, argv);

  std::size_t ordered = 0, faster = 0;
  for (std::uint64_t seed = first_seed; seed < first_seed + n_seeds; ++seed) {
    const auto r = run_seed(s, seed);
    std::printf("seed %llu  bcsd %.4f\n", static_cast<unsigned long long>(seed), r.bcsd_mae);
    for (const auto* fam : {r.srdrn, r.unet})
      for (int i = 0; i < 3; ++i) {
        std::printf("  %-15s mae %.4f  %.1fs  val", fam[i].name.c_str(), fam[i].test_mae, fam[i].seconds);
        for (std::size_t e = 0; e < fam[i].val_curve.size(); e += std::max<std::size_t>(1, fam[i].val_curve.size() / 10))
          std::printf(" %.3f", fam[i].val_curve[e]);
        std::printf(" | %.4f\n", fam[i].val_curve.back());
      }
    const bool o = ordering_holds(r);
    const bool f = converges_faster(r.unet[0], r.unet[1]) && converges_faster(r.unet[0], r.unet[2]);
    std::printf("  ordering %s  convergence %s (sin reaches at %zu, rbf at %zu of %zu)\n", o ? "yes" : "no",
                f ? "yes" : "no", first_epoch_reaching(r.unet[1].val_curve, r.unet[0].val_curve.back()),
                first_epoch_reaching(r.unet[2].val_curve, r.unet[0].val_curve.back()), r.unet[0].val_curve.size());
    std::fflush(stdout);
    ordered += o;
    faster += f;
  }
  std::printf("ordering %zu/%zu  convergence %zu/%zu\n", ordered, n_seeds, faster, n_seeds);
}
