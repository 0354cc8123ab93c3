#ifndef MATSAC_IO_HPP
#define MATSAC_IO_HPP

/// JSON file formats.
///
/// Dataset files store the per-frequency samples as rows [n, Im z_n, Re G,
/// Im G] plus beta and the noise parameters, and optionally the generating
/// model descriptor.  Result files store the reconstruction, the resolved
/// configuration, recovery diagnostics, and a broadened spectral curve.
/// Serialization is deterministic (sorted keys, shortest round-trip
/// doubles), so identical runs produce byte-identical files.

#include <complex>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "matsac/model.hpp"
#include "matsac/recover.hpp"

namespace matsac {

using Json = nlohmann::json;

namespace detail {

inline Json complex_to_json(const Complex& z) { return Json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("expected [re, im] pair");
  return Complex(j[0].get<double>(), j[1].get<double>());
}

inline Json complex_list_to_json(const std::vector<Complex>& v) {
  Json out = Json::array();
  for (const auto& z : v) out.push_back(complex_to_json(z));
  return out;
}

inline std::vector<Complex> complex_list_from_json(const Json& j) {
  std::vector<Complex> out;
  for (const auto& e : j) out.push_back(complex_from_json(e));
  return out;
}

}  // namespace detail

inline Json model_to_json(const SpectralModel& model) {
  Json j;
  if (const auto* d = std::get_if<DeltaModel>(&model)) {
    j["type"] = "delta";
    Json atoms = Json::array();
    for (const auto& a : d->atoms) atoms.push_back(Json::array({a.location, a.weight}));
    j["atoms"] = atoms;
  } else if (const auto* p = std::get_if<PoleModel>(&model)) {
    j["type"] = "poles";
    Json poles = Json::array();
    for (const auto& q : p->poles)
      poles.push_back(Json::array({q.location.real(), q.location.imag(),
                                   q.weight.real(), q.weight.imag()}));
    j["poles"] = poles;
  } else {
    const auto& g = std::get<GaussianMixture>(model);
    j["type"] = "gaussians";
    Json comps = Json::array();
    for (const auto& c : g.components)
      comps.push_back(Json::array({c.center, c.variance, c.mass}));
    j["components"] = comps;
  }
  return j;
}

inline SpectralModel model_from_json(const Json& j) {
  std::string type = j.at("type").get<std::string>();
  if (type == "delta") {
    DeltaModel m;
    for (const auto& a : j.at("atoms"))
      m.atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
    m.validate();
    return m;
  }
  if (type == "poles") {
    PoleModel m;
    for (const auto& p : j.at("poles"))
      m.poles.push_back({Complex(p.at(0).get<double>(), p.at(1).get<double>()),
                         Complex(p.at(2).get<double>(), p.at(3).get<double>())});
    m.validate();
    return m;
  }
  if (type == "gaussians") {
    GaussianMixture m;
    for (const auto& c : j.at("components"))
      m.components.push_back(
          {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()});
    m.validate();
    return m;
  }
  throw std::invalid_argument("unknown model type '" + type + "'");
}

inline Json dataset_to_json(const MatsubaraDataset& data,
                            const std::optional<SpectralModel>& model = std::nullopt) {
  Json j;
  j["beta"] = data.beta;
  j["n"] = data.n_points;
  if (data.noise_sigma) j["sigma"] = *data.noise_sigma;
  if (data.seed) j["seed"] = *data.seed;
  if (model) j["model"] = model_to_json(*model);
  Json rows = Json::array();
  for (std::size_t i = 0; i < data.points.size(); ++i)
    rows.push_back(Json::array({static_cast<int>(i) + 1, data.points[i].imag(),
                                data.samples[i].real(), data.samples[i].imag()}));
  j["rows"] = rows;
  return j;
}

inline MatsubaraDataset dataset_from_json(const Json& j,
                                          std::optional<SpectralModel>* model_out = nullptr) {
  MatsubaraDataset data;
  data.beta = j.at("beta").get<double>();
  data.n_points = j.at("n").get<int>();
  if (j.contains("sigma")) data.noise_sigma = j["sigma"].get<double>();
  if (j.contains("seed")) data.seed = j["seed"].get<std::uint64_t>();
  if (model_out) {
    *model_out = std::nullopt;
    if (j.contains("model")) *model_out = model_from_json(j["model"]);
  }
  const auto& rows = j.at("rows");
  if (rows.empty()) throw std::invalid_argument("dataset: no rows");
  int expected = 1;
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != 4)
      throw std::invalid_argument("dataset: rows must be [n, im_z, re_g, im_g]");
    if (row.at(0).get<int>() != expected)
      throw std::invalid_argument("dataset: row indices must run 1..n in order");
    ++expected;
    data.points.emplace_back(0.0, row.at(1).get<double>());
    data.samples.emplace_back(row.at(2).get<double>(), row.at(3).get<double>());
  }
  if (static_cast<int>(data.points.size()) != data.n_points)
    throw std::invalid_argument("dataset: row count does not match n");
  return data;
}

inline const char* kind_name(ReconstructionKind kind) {
  return kind == ReconstructionKind::molecule ? "molecule" : "condensed";
}

inline ReconstructionKind kind_from_name(const std::string& name) {
  if (name == "molecule") return ReconstructionKind::molecule;
  if (name == "condensed") return ReconstructionKind::condensed;
  throw std::invalid_argument("unknown reconstruction kind '" + name + "'");
}

inline Json config_to_json(const ResolvedConfig& cfg) {
  Json j;
  j["kind"] = kind_name(cfg.kind);
  if (cfg.kind == ReconstructionKind::molecule) {
    j["epsilon"] = cfg.epsilon;
    j["n_interp"] = cfg.n_interp;
  } else {
    j["grid_min"] = cfg.grid_min;
    j["grid_max"] = cfg.grid_max;
    j["grid_count"] = cfg.grid_count;
  }
  j["svd_cutoff"] = cfg.svd_cutoff;
  j["d_max"] = cfg.d_max;
  j["l"] = cfg.l;
  j["n_samples"] = cfg.n_samples;
  j["noise_floor"] = cfg.noise_floor;
  j["heuristic_floor"] = cfg.heuristic_floor;
  j["tol_interior"] = cfg.tol_interior;
  j["eta"] = cfg.eta;
  j["feas_tol"] = cfg.feas_tol;
  j["kkt_tol"] = cfg.kkt_tol;
  j["max_iterations"] = cfg.max_iterations;
  return j;
}

inline Json reconstruction_to_json(const Reconstruction& rec) {
  Json j;
  j["kind"] = kind_name(rec.kind);
  j["poles"] = detail::complex_list_to_json(rec.poles);
  j["weights"] = detail::complex_list_to_json(rec.weights);
  j["residual"] = rec.residual;
  j["max_violation"] = rec.max_violation;
  j["eta"] = rec.eta;
  return j;
}

inline Reconstruction reconstruction_from_json(const Json& j) {
  Reconstruction rec;
  rec.kind = kind_from_name(j.at("kind").get<std::string>());
  rec.poles = detail::complex_list_from_json(j.at("poles"));
  rec.weights = detail::complex_list_from_json(j.at("weights"));
  if (rec.poles.size() != rec.weights.size())
    throw std::invalid_argument("reconstruction: poles/weights length mismatch");
  rec.residual = j.at("residual").get<double>();
  rec.max_violation = j.value("max_violation", 0.0);
  rec.eta = j.value("eta", 0.01);
  return rec;
}

/// Broadened curve samples carried inside a result file.
struct SpectralCurve {
  double eta = 0.01;
  std::vector<double> x;
  std::vector<double> a;
};

inline Json result_to_json(const PipelineResult& result, const SpectralCurve& curve) {
  Json j;
  j["kind"] = kind_name(result.reconstruction.kind);
  j["config"] = config_to_json(result.config);
  j["reconstruction"] = reconstruction_to_json(result.reconstruction);

  Json d;
  d["singular_values"] = result.prony.singular_values;
  d["detected_rank"] = result.prony.detected_rank;
  d["saturated"] = result.prony.saturated;
  d["poly_coeffs"] = detail::complex_list_to_json(result.prony.poly_coeffs);
  d["exterior_poles"] = detail::complex_list_to_json(result.prony.exterior_poles);
  d["rejected_roots"] = detail::complex_list_to_json(result.prony.rejected_roots);
  d["interp_residual"] = result.interp_residual;
  d["interp_svd_rank"] = result.interp_svd_rank;
  d["max_imag_discarded"] = result.max_imag_discarded;
  d["discarded_poles"] = detail::complex_list_to_json(result.discarded_poles);
  d["warnings"] = result.warnings;
  j["diagnostics"] = d;

  Json c;
  c["eta"] = curve.eta;
  c["x"] = curve.x;
  c["a"] = curve.a;
  j["curve"] = c;
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "' for reading");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
  }
  return j;
}

inline void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace matsac

#endif  // MATSAC_IO_HPP
