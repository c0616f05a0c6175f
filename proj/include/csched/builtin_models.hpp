#pragma once

#include <string>

#include "csched/model.hpp"

namespace csched {

/// Bundled models mirroring data/paper.json and data/paper_meas.json.
inline constexpr const char* kBuiltinPaperModel = R"json({
  "A": [[1.2, 0.2], [0.3, 0.8]],
  "C": [[1.0, 1.0]],
  "Q": [[1.0, 0.0], [0.0, 1.0]],
  "R": [[1.0]],
  "lambda": 0.6,
  "lambda_e": 0.6
})json";

inline constexpr const char* kBuiltinMeasModel = R"json({
  "A": [[1.2, 0.2], [0.3, 0.8]],
  "C": [[1.0, -0.5]],
  "Q": [[1.0, 0.0], [0.0, 1.0]],
  "R": [[1.0]],
  "lambda": 0.6,
  "lambda_e": 0.6
})json";

/// Resolves "paper" / "paper_meas" to the bundled models, anything else as
/// a file path.
inline SystemModel resolve_model(const std::string& name) {
    if (name == "paper") return SystemModel::from_json_text(kBuiltinPaperModel);
    if (name == "paper_meas") return SystemModel::from_json_text(kBuiltinMeasModel);
    return SystemModel::from_file(name);
}

}  // namespace csched
