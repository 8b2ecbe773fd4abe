#pragma once

#include <filesystem>

#include <json.hpp>

#include "latent_itr/trainer.hpp"

namespace litr {

nlohmann::json training_config_to_json(const TrainingConfig& config);
TrainingConfig training_config_from_json(const nlohmann::json& j);

nlohmann::json model_params_to_json(const ModelParams& params);
ModelParams model_params_from_json(const nlohmann::json& j, const ItemSchema& schema);

// Model file: schema, K, parameters, anchors, config, standardisation,
// aggregate weights, objective log and library version.
nlohmann::json model_to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& j);

void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

}  // namespace litr
