#include "ridge/serialize.hpp"

#include <cmath>
#include <limits>

namespace ridge {

using nlohmann::json;

json real_to_json(double v) {
  if (std::isinf(v)) return json(v > 0 ? "infinity" : "-infinity");
  return json(v);
}

double real_from_json(const json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "infinity") return std::numeric_limits<double>::infinity();
    if (s == "-infinity") return -std::numeric_limits<double>::infinity();
    throw ConfigError("unrecognized numeric string: " + s);
  }
  if (!j.is_number()) throw ConfigError("expected a number");
  return j.get<double>();
}

void to_json(json& j, const SeedSpec& s) {
  j = json{{"master_seed", s.master_seed}, {"stream_index", s.stream_index}};
}

void from_json(const json& j, SeedSpec& s) {
  s.master_seed = j.at("master_seed").get<std::uint64_t>();
  s.stream_index = j.at("stream_index").get<std::uint64_t>();
}

void to_json(json& j, const NoisePrior& p) {
  switch (p.kind) {
    case NoisePrior::Kind::Flat:
      j = json{{"kind", "flat"}};
      break;
    case NoisePrior::Kind::Delta:
      j = json{{"kind", "delta"}, {"sigma_sq_0", p.sigma_sq_0}};
      break;
    case NoisePrior::Kind::InverseGamma:
      j = json{{"kind", "inverse_gamma"}, {"shape", p.shape}, {"rate", p.rate}};
      break;
  }
}

void from_json(const json& j, NoisePrior& p) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "flat") {
    p = NoisePrior::flat();
  } else if (kind == "delta") {
    p = NoisePrior::delta(j.at("sigma_sq_0").get<double>());
  } else if (kind == "inverse_gamma") {
    p = NoisePrior::inverse_gamma(j.at("shape").get<double>(),
                                  j.at("rate").get<double>());
  } else {
    throw ConfigError("unknown noise prior kind: " + kind);
  }
}

void to_json(json& j, const HyperParams& h) {
  j = json{{"beta", real_to_json(h.beta)},
           {"eta", h.eta},
           {"noise_prior", h.noise_prior}};
}

void from_json(const json& j, HyperParams& h) {
  h = HyperParams(real_from_json(j.at("beta")), j.at("eta").get<double>(),
                  j.at("noise_prior").get<NoisePrior>());
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("expected matrix rows");
  const std::size_t cols = j.front().size();
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != cols) throw ConfigError("ragged matrix rows");
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("expected a vector");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

json instance_to_json(const RegressionInstance& inst) {
  return json{{"design", matrix_to_json(inst.design())},
              {"targets", vector_to_json(inst.targets())},
              {"theta0", vector_to_json(inst.theta0())},
              {"sigma0_sq", inst.sigma0_sq()},
              {"scaled", inst.scaled()}};
}

RegressionInstance instance_from_json(const json& j) {
  return RegressionInstance(
      matrix_from_json(j.at("design")), vector_from_json(j.at("targets")),
      vector_from_json(j.at("theta0")), j.at("sigma0_sq").get<double>(),
      j.at("scaled").get<bool>());
}

json population_to_json(const PopulationModel& m) {
  return json{{"sigma_pop", matrix_to_json(m.sigma_pop())},
              {"theta_prior_var", m.theta_prior_var()},
              {"zeta", m.zeta()}};
}

PopulationModel population_from_json(const json& j) {
  return PopulationModel(matrix_from_json(j.at("sigma_pop")),
                         j.at("theta_prior_var").get<double>(),
                         j.at("zeta").get<double>());
}

json spectral_density_to_json(const SpectralDensity& s) {
  switch (s.kind()) {
    case SpectralDensity::Kind::Samples:
      return json{{"kind", "samples"}, {"eigenvalues", s.samples()}};
    case SpectralDensity::Kind::MarchenkoPastur:
      return json{{"kind", "marchenko_pastur"}, {"zeta", s.zeta()}};
    case SpectralDensity::Kind::Histogram:
      return json{{"kind", "histogram"},
                  {"bin_edges", s.bin_edges()},
                  {"masses", s.masses()}};
  }
  throw ConfigError("unknown spectral density kind");
}

SpectralDensity spectral_density_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "samples")
    return SpectralDensity::from_samples(
        j.at("eigenvalues").get<std::vector<double>>());
  if (kind == "marchenko_pastur")
    return SpectralDensity::marchenko_pastur(j.at("zeta").get<double>());
  if (kind == "histogram")
    return SpectralDensity::histogram(
        j.at("bin_edges").get<std::vector<double>>(),
        j.at("masses").get<std::vector<double>>());
  throw ConfigError("unknown spectral density kind: " + kind);
}

void to_json(json& j, const FreeEnergyBreakdown& f) {
  j = json{{"free_energy", f.free_energy},
           {"avg_energy", f.avg_energy},
           {"entropy", f.entropy},
           {"temperature", f.temperature}};
}

FreeEnergyBreakdown breakdown_from_json(const json& j) {
  return FreeEnergyBreakdown(
      j.at("free_energy").get<double>(), j.at("avg_energy").get<double>(),
      j.at("entropy").get<double>(), j.at("temperature").get<double>());
}

void to_json(json& j, const RateFunctionEval& r) {
  j = json{{"alpha", r.alpha},
           {"saddle", r.saddle},
           {"rate", r.rate},
           {"valid_alpha_lo", real_to_json(r.valid_alpha_range.first)},
           {"valid_alpha_hi", real_to_json(r.valid_alpha_range.second)}};
}

RateFunctionEval rate_eval_from_json(const json& j) {
  return RateFunctionEval(j.at("alpha").get<double>(),
                          j.at("saddle").get<double>(),
                          j.at("rate").get<double>(),
                          {real_from_json(j.at("valid_alpha_lo")),
                           real_from_json(j.at("valid_alpha_hi"))});
}

}  // namespace ridge
