#pragma once

#include "cfkd/models/baselines.hpp"
#include "cfkd/models/cfkd_afn.hpp"
#include "cfkd/models/teacher.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace cfkd::models {

inline constexpr int kCheckpointVersion = 1;

nlohmann::json to_json(const numcore::MlpState& net);
numcore::MlpState mlp_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LowFiModel& m);
LowFiModel lowfi_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FusionLayer& f);
FusionLayer fusion_from_json(const nlohmann::json& j);

nlohmann::json to_json(const HfModel& m);
HfModel hf_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PftModel& m);
PftModel pft_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MftlnnModel& m);
MftlnnModel mftlnn_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AutoencoderModel& m);
AutoencoderModel autoencoder_from_json(const nlohmann::json& j);
/// The teacher is embedded in full.
nlohmann::json to_json(const MfdfModel& m);
MfdfModel mfdf_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CfkdAfnModel& m);
CfkdAfnModel cfkd_from_json(const nlohmann::json& j);

/// {"format": "cfkd-checkpoint", "version": 1, "method": ..., "model": ...}
nlohmann::json checkpoint_envelope(const std::string& method, nlohmann::json model);
/// Validates format and version; returns the envelope.
nlohmann::json read_checkpoint(const std::filesystem::path& path);
void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& envelope);

} // namespace cfkd::models
