// Command-line front end: resampling, lost/lossy frame recovery, flow
// evaluation sweeps and the streaming simulator.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "framecast/framecast.hpp"

namespace {

using namespace framecast;

void echo(const std::string& line) { std::cout << "# " << line << "\n"; }

HistoryBuffer load_history(const std::vector<std::string>& paths) {
  HistoryBuffer hist;
  for (std::size_t i = 0; i < 3; ++i) hist.frames[i] = read_ppm(paths[i]);
  hist.indices = {0, 1, 2};
  hist.validate();
  return hist;
}

std::string join_args(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += v[i];
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"framecast: motion-compensated frame recovery for lossy video streaming"};
  app.require_subcommand(1);

  // degrade
  auto* cmd_degrade = app.add_subcommand("degrade", "bicubic antialiased downscale of a PPM image");
  std::string deg_in, deg_out;
  int deg_scale = 2;
  cmd_degrade->add_option("--in", deg_in, "input PPM/PGM")->required();
  cmd_degrade->add_option("--out", deg_out, "output PPM/PGM")->required();
  cmd_degrade->add_option("--scale", deg_scale, "integer scale factor")
      ->required()
      ->check(CLI::Range(2, 1024));
  cmd_degrade->callback([&] {
    echo("degrade in=" + deg_in + " out=" + deg_out + " scale=" + std::to_string(deg_scale));
    write_ppm(degrade(read_ppm(deg_in), deg_scale), deg_out);
  });

  // upscale
  auto* cmd_upscale = app.add_subcommand("upscale", "bicubic upscale of a PPM image");
  // --h would collide with the default -h help flag
  cmd_upscale->set_help_flag("--help", "print help and exit");
  std::string up_in, up_out;
  int up_w = 0, up_h = 0;
  cmd_upscale->add_option("--in", up_in, "input PPM/PGM")->required();
  cmd_upscale->add_option("--out", up_out, "output PPM/PGM")->required();
  cmd_upscale->add_option("--w", up_w, "target width")->required()->check(CLI::PositiveNumber);
  cmd_upscale->add_option("--h", up_h, "target height")->required()->check(CLI::PositiveNumber);
  cmd_upscale->callback([&] {
    echo("upscale in=" + up_in + " out=" + up_out + " w=" + std::to_string(up_w) +
         " h=" + std::to_string(up_h));
    write_ppm(upscale(read_ppm(up_in), up_h, up_w), up_out);
  });

  // predict (lost case)
  auto* cmd_predict = app.add_subcommand("predict", "predict a lost frame from three HR frames");
  std::vector<std::string> pred_hist;
  std::string pred_out;
  double pred_t = 1.0;
  cmd_predict->add_option("--hist", pred_hist, "three history frames, oldest first")
      ->required()
      ->expected(3);
  cmd_predict->add_option("--t", pred_t, "prediction time in frame spacings")
      ->check(CLI::PositiveNumber);
  cmd_predict->add_option("--out", pred_out, "output PPM")->required();
  cmd_predict->callback([&] {
    echo("predict hist=" + join_args(pred_hist) + " t=" + std::to_string(pred_t) +
         " out=" + pred_out);
    auto [img, diag] = predict_lost(load_history(pred_hist), pred_t);
    write_ppm(img, pred_out);
  });

  // enhance (lossy case)
  auto* cmd_enhance =
      app.add_subcommand("enhance", "enhance a low-resolution frame using three HR frames");
  std::vector<std::string> enh_hist;
  std::string enh_lr, enh_out;
  int enh_scale = 2;
  double enh_t = 1.0;
  cmd_enhance->add_option("--hist", enh_hist, "three history frames, oldest first")
      ->required()
      ->expected(3);
  cmd_enhance->add_option("--lr", enh_lr, "received low-resolution frame")->required();
  cmd_enhance->add_option("--scale", enh_scale, "degradation scale of --lr")
      ->required()
      ->check(CLI::Range(2, 1024));
  cmd_enhance->add_option("--t", enh_t, "temporal distance in frame spacings")
      ->check(CLI::PositiveNumber);
  cmd_enhance->add_option("--out", enh_out, "output PPM")->required();
  cmd_enhance->callback([&] {
    echo("enhance hist=" + join_args(enh_hist) + " lr=" + enh_lr +
         " scale=" + std::to_string(enh_scale) + " t=" + std::to_string(enh_t) +
         " out=" + enh_out);
    auto [img, diag] = enhance_lossy(load_history(enh_hist), read_ppm(enh_lr), enh_scale, enh_t);
    write_ppm(img, enh_out);
  });

  // flow-eval
  auto* cmd_floweval =
      app.add_subcommand("flow-eval", "flow accuracy sweeps over scale or frame gap");
  std::string fe_scene, fe_out, fe_trace_text = "H H H L4";
  std::vector<int> fe_scales, fe_gaps;
  std::uint64_t fe_seed = 0;
  int fe_gap = 1;
  cmd_floweval->add_option("--scene", fe_scene, "scene spec JSON file")->required();
  cmd_floweval->add_option("--sweep-scale", fe_scales, "comma-separated scales")->delimiter(',');
  cmd_floweval->add_option("--sweep-gap", fe_gaps, "comma-separated gaps")->delimiter(',');
  cmd_floweval->add_option("--trace", fe_trace_text,
                           "trace text choosing the evaluated event for --sweep-gap");
  cmd_floweval->add_option("--gap", fe_gap, "frame gap for --sweep-scale")->check(CLI::PositiveNumber);
  cmd_floweval->add_option("--seed", fe_seed, "run seed");
  cmd_floweval->add_option("--out", fe_out, "output CSV path")->required();
  cmd_floweval->callback([&] {
    if (fe_scales.empty() == fe_gaps.empty())
      throw CLI::ValidationError("flow-eval", "give exactly one of --sweep-scale / --sweep-gap");
    RunConfig cfg;
    cfg.scene = parse_scene_spec(detail::read_file_bytes(fe_scene));
    cfg.seed = fe_seed;
    cfg.gap = fe_gap;
    if (!fe_scales.empty()) {
      echo("flow-eval scene=" + fe_scene + " sweep-scale seed=" + std::to_string(fe_seed) +
           " gap=" + std::to_string(fe_gap) + " out=" + fe_out);
      detail::write_file_bytes(fe_out, sweep_scale_csv(sweep_scale(cfg, fe_scales)));
    } else {
      cfg.trace = parse_trace(fe_trace_text);
      echo("flow-eval scene=" + fe_scene + " sweep-gap seed=" + std::to_string(fe_seed) +
           " trace=" + format_trace(cfg.trace) + " out=" + fe_out);
      detail::write_file_bytes(fe_out, sweep_gap_csv(sweep_gap(cfg, fe_gaps)));
    }
  });

  // simulate
  auto* cmd_simulate = app.add_subcommand("simulate", "replay a channel trace and score recovery");
  std::string sim_scene, sim_dir, sim_trace, sim_report, sim_csv, sim_history = "recovered";
  std::uint64_t sim_seed = 0;
  int sim_gap = 1;
  cmd_simulate->add_option("--scene", sim_scene, "scene spec JSON file");
  cmd_simulate->add_option("--frames", sim_dir, "directory of PPM frames instead of --scene");
  cmd_simulate->add_option("--trace", sim_trace, "channel trace file")->required();
  cmd_simulate->add_option("--report", sim_report, "output report JSON")->required();
  cmd_simulate->add_option("--csv", sim_csv, "also write the report as CSV");
  cmd_simulate->add_option("--history", sim_history, "history mode")
      ->check(CLI::IsMember({"recovered", "oracle"}));
  cmd_simulate->add_option("--gap", sim_gap, "frame gap")->check(CLI::PositiveNumber);
  cmd_simulate->add_option("--seed", sim_seed, "run seed");
  cmd_simulate->callback([&] {
    if (sim_scene.empty() == sim_dir.empty())
      throw CLI::ValidationError("simulate", "give exactly one of --scene / --frames");
    RunConfig cfg;
    if (!sim_dir.empty()) cfg.input_dir = sim_dir;
    else cfg.scene = parse_scene_spec(detail::read_file_bytes(sim_scene));
    cfg.trace = parse_trace(detail::read_file_bytes(sim_trace));
    cfg.history_mode = sim_history == "oracle" ? HistoryMode::Oracle : HistoryMode::Recovered;
    cfg.gap = sim_gap;
    cfg.seed = sim_seed;
    echo("simulate " + std::string(sim_dir.empty() ? "scene=" + sim_scene : "frames=" + sim_dir) +
         " trace=" + sim_trace + " report=" + sim_report + " history=" + sim_history +
         " gap=" + std::to_string(sim_gap) + " seed=" + std::to_string(sim_seed));
    const RecoveryReport report = run_simulation(cfg);
    write_report(report, sim_report, ReportFormat::Json);
    if (!sim_csv.empty()) write_report(report, sim_csv, ReportFormat::Csv);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
