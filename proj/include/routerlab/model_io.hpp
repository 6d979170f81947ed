#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "routerlab/routers.hpp"

namespace routerlab {

inline constexpr int kModelVersion = 1;

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

// {"rows", "cols", "data"}: row-major little-endian float64, base64.
nlohmann::json encode_block(const Eigen::MatrixXd& m);
Eigen::MatrixXd decode_block(const nlohmann::json& j);

struct LoadedModel {
  std::unique_ptr<Router> router;
  double threshold = 0.5;
  nlohmann::json hyper;
};

// Container: kind, version, hyper, threshold, vocab, blocks.
nlohmann::json model_to_json(const Router& r, double threshold, const nlohmann::json& hyper);
LoadedModel model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const Router& r, double threshold,
                const nlohmann::json& hyper);
// Throws MissingArtifactError when the file does not exist.
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace routerlab
