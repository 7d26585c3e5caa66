#pragma once

// JSON round-trip for the domain types.  Doubles rely on the shortest
// round-trip representation, so serialize/parse is lossless.  +/-infinity
// (legal for beta and range endpoints) is encoded as a string since JSON has
// no infinity literal.

#include <json.hpp>

#include "ridge/model.hpp"
#include "ridge/rng.hpp"

namespace ridge {

nlohmann::json real_to_json(double v);
double real_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const SeedSpec& s);
void from_json(const nlohmann::json& j, SeedSpec& s);

void to_json(nlohmann::json& j, const NoisePrior& p);
void from_json(const nlohmann::json& j, NoisePrior& p);

void to_json(nlohmann::json& j, const HyperParams& h);
void from_json(const nlohmann::json& j, HyperParams& h);

nlohmann::json instance_to_json(const RegressionInstance& inst);
RegressionInstance instance_from_json(const nlohmann::json& j);

nlohmann::json population_to_json(const PopulationModel& m);
PopulationModel population_from_json(const nlohmann::json& j);

nlohmann::json spectral_density_to_json(const SpectralDensity& s);
SpectralDensity spectral_density_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const FreeEnergyBreakdown& f);
FreeEnergyBreakdown breakdown_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const RateFunctionEval& r);
RateFunctionEval rate_eval_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace ridge
