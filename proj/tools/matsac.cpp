// Command-line front end: synthesize datasets, run the continuation
// pipelines, and evaluate broadened spectral curves.
//
// Exit codes: 0 on success, 2 for argument/input validation failures, 3 for
// numerical failures inside a pipeline stage.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "matsac/matsac.hpp"

namespace {

using matsac::Complex;
using matsac::Json;

/// Model descriptors are accepted inline (a JSON object string) or as a path
/// to a JSON file.
matsac::SpectralModel load_model(const std::string& arg) {
  std::string text = arg;
  if (arg.find('{') == std::string::npos) {
    Json j = matsac::read_json_file(arg);
    return matsac::model_from_json(j);
  }
  try {
    return matsac::model_from_json(Json::parse(text));
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed model JSON: ") + e.what());
  }
}

struct SynthArgs {
  std::string model;
  std::string out;
  double beta = 100.0;
  int n_points = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& args) {
  matsac::SpectralModel model = load_model(args.model);
  matsac::MatsubaraDataset data =
      matsac::synthesize(model, args.beta, args.n_points, args.sigma, args.seed);
  matsac::write_json_file(args.out, matsac::dataset_to_json(data, model));
  double m = matsac::average_magnitude(data.samples);
  std::cout << "wrote " << args.out << ": n = " << data.n_points
            << ", beta = " << data.beta << ", sigma = " << args.sigma
            << ", rms magnitude = " << m << '\n';
  return 0;
}

struct ContinueArgs {
  std::string kase;
  std::string in;
  std::string out;
  matsac::PipelineConfig cfg;
  std::optional<double> curve_min, curve_max;
  int curve_count = 1201;
};

matsac::SpectralCurve make_curve(const matsac::Reconstruction& rec, double eta,
                                 std::optional<double> lo_opt,
                                 std::optional<double> hi_opt, int count) {
  matsac::SpectralCurve curve;
  curve.eta = eta;
  if (rec.poles.empty() && !(lo_opt && hi_opt)) return curve;
  double lo, hi;
  if (lo_opt && hi_opt) {
    lo = *lo_opt;
    hi = *hi_opt;
  } else {
    lo = rec.poles.front().real();
    hi = lo;
    for (const auto& xi : rec.poles) {
      lo = std::min(lo, xi.real());
      hi = std::max(hi, xi.real());
    }
    lo -= 1.0;
    hi += 1.0;
  }
  if (!(hi > lo) || count < 2)
    throw std::invalid_argument("curve: need max > min and count >= 2");
  for (int i = 0; i < count; ++i) {
    double x = lo + (hi - lo) * i / (count - 1);
    curve.x.push_back(x);
    curve.a.push_back(matsac::eval_spectral(rec, x, eta));
  }
  return curve;
}

int cmd_continue(const ContinueArgs& args) {
  std::optional<matsac::SpectralModel> model;
  Json j = matsac::read_json_file(args.in);
  matsac::MatsubaraDataset data = matsac::dataset_from_json(j, &model);

  matsac::PipelineConfig cfg = args.cfg;
  bool molecule = args.kase == "molecule";
  if (molecule && !cfg.epsilon && model) {
    if (const auto* d = std::get_if<matsac::DeltaModel>(&*model)) {
      double gap = d->gap();
      if (gap > 0.0) cfg.epsilon = gap;
    }
  }

  matsac::PipelineResult result;
  try {
    result = molecule ? matsac::run_molecule_pipeline(data, cfg)
                      : matsac::run_cdm_pipeline(data, cfg);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception& e) {
    std::cerr << "matsac: pipeline failed: " << e.what() << '\n';
    return 3;
  }

  for (const auto& w : result.warnings) std::cerr << "matsac: warning: " << w << '\n';

  matsac::SpectralCurve curve =
      make_curve(result.reconstruction, result.config.eta, args.curve_min,
                 args.curve_max, args.curve_count);
  matsac::write_json_file(args.out, matsac::result_to_json(result, curve));
  std::cout << "wrote " << args.out << ": detected rank = " << result.prony.detected_rank
            << ", poles kept = " << result.reconstruction.poles.size()
            << ", data misfit = " << result.reconstruction.residual << '\n';
  return 0;
}

struct EvalArgs {
  std::string in;
  std::string out;
  double x_min = 0.0;
  double x_max = 0.0;
  int count = 0;
  std::optional<double> eta;
};

int cmd_eval(const EvalArgs& args) {
  Json j = matsac::read_json_file(args.in);
  matsac::Reconstruction rec = matsac::reconstruction_from_json(j.at("reconstruction"));
  double eta = args.eta ? *args.eta : rec.eta;
  if (!(eta > 0.0)) throw std::invalid_argument("eval: eta must be positive");
  if (!(args.x_max > args.x_min) || args.count < 2)
    throw std::invalid_argument("eval: need x_max > x_min and count >= 2");

  std::FILE* out = std::fopen(args.out.c_str(), "w");
  if (!out) throw std::invalid_argument("cannot open '" + args.out + "' for writing");
  std::fputs("x,A\n", out);
  for (int i = 0; i < args.count; ++i) {
    double x = args.x_min + (args.x_max - args.x_min) * i / (args.count - 1);
    std::fprintf(out, "%.17g,%.17g\n", x, matsac::eval_spectral(rec, x, eta));
  }
  std::fclose(out);
  std::cout << "wrote " << args.out << ": " << args.count << " points, eta = " << eta
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matsac: analytic continuation of Matsubara Green's function samples"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "synthesize a noisy Matsubara dataset");
  s->add_option("--model", synth.model, "model JSON (inline object or file path)")
      ->required();
  s->add_option("--beta", synth.beta, "inverse temperature")->check(CLI::PositiveNumber);
  s->add_option("--n-points", synth.n_points, "number of Matsubara frequencies")
      ->required()
      ->check(CLI::PositiveNumber);
  s->add_option("--sigma", synth.sigma, "relative noise level")
      ->check(CLI::NonNegativeNumber);
  s->add_option("--seed", synth.seed, "noise seed");
  s->add_option("--out", synth.out, "output dataset path")->required();

  ContinueArgs cont;
  auto* c = app.add_subcommand("continue", "reconstruct a spectral function");
  c->add_option("--case", cont.kase, "pipeline: molecule or condensed (alias cdm)")
      ->required()
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, std::string>{{"molecule", "molecule"},
                                             {"condensed", "condensed"},
                                             {"cdm", "condensed"}}));
  c->add_option("--in", cont.in, "input dataset path")->required();
  c->add_option("--out", cont.out, "output result path")->required();
  double eps = 0.0, floor = 0.0, gmin = 0.0, gmax = 0.0, cmin = 0.0, cmax = 0.0;
  int ninterp = 0, l = 0, nsamp = 0, gcount = 0;
  auto* eps_opt = c->add_option("--epsilon", eps, "molecule spectral gap scale");
  auto* ni_opt = c->add_option("--n-interp", ninterp, "molecule basis size (even)");
  c->add_option("--svd-cutoff", cont.cfg.svd_cutoff, "relative singular value cutoff");
  c->add_option("--d-max", cont.cfg.d_max, "maximum recoverable pole count");
  auto* l_opt = c->add_option("--l", l, "Hankel row count");
  auto* ns_opt = c->add_option("--n-samples", nsamp, "circle sample count (even)");
  auto* nf_opt = c->add_option("--noise-floor", floor, "relative rank-detection floor");
  c->add_option("--tol-interior", cont.cfg.tol_interior, "unit-circle exclusion band");
  c->add_option("--eta", cont.cfg.eta, "evaluation broadening");
  auto* gm_opt = c->add_option("--grid-min", gmin, "constraint grid lower edge");
  auto* gx_opt = c->add_option("--grid-max", gmax, "constraint grid upper edge");
  auto* gc_opt = c->add_option("--grid-count", gcount, "constraint grid point count");
  c->add_option("--feas-tol", cont.cfg.feas_tol, "constraint violation tolerance");
  c->add_option("--kkt-tol", cont.cfg.kkt_tol, "stationarity tolerance");
  c->add_option("--max-iterations", cont.cfg.max_iterations, "solver iteration cap");
  auto* cm_opt = c->add_option("--curve-min", cmin, "stored curve lower edge");
  auto* cx_opt = c->add_option("--curve-max", cmax, "stored curve upper edge");
  c->add_option("--curve-count", cont.curve_count, "stored curve point count");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "evaluate a broadened spectral curve as CSV");
  e->add_option("--in", eval.in, "input result path")->required();
  e->add_option("--out", eval.out, "output CSV path")->required();
  e->add_option("--x-min", eval.x_min, "curve lower edge")->required();
  e->add_option("--x-max", eval.x_max, "curve upper edge")->required();
  e->add_option("--count", eval.count, "curve point count")->required();
  double eval_eta = 0.0;
  auto* ee_opt = e->add_option("--eta", eval_eta, "evaluation broadening");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (s->parsed()) return cmd_synth(synth);
    if (c->parsed()) {
      if (*eps_opt) cont.cfg.epsilon = eps;
      if (*ni_opt) cont.cfg.n_interp = ninterp;
      if (*l_opt) cont.cfg.l = l;
      if (*ns_opt) cont.cfg.n_samples = nsamp;
      if (*nf_opt) cont.cfg.noise_floor = floor;
      if (*gm_opt) cont.cfg.grid_min = gmin;
      if (*gx_opt) cont.cfg.grid_max = gmax;
      if (*gc_opt) cont.cfg.grid_count = gcount;
      if (*cm_opt) cont.curve_min = cmin;
      if (*cx_opt) cont.curve_max = cmax;
      return cmd_continue(cont);
    }
    if (*ee_opt) eval.eta = eval_eta;
    return cmd_eval(eval);
  } catch (const std::invalid_argument& err) {
    std::cerr << "matsac: error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "matsac: error: " << err.what() << '\n';
    return 3;
  }
}
