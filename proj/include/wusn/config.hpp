#pragma once

#include "wusn/bench.hpp"

#include <filesystem>
#include <istream>

namespace wusn {

// Flat `key = value` experiment files. Lists are comma separated; `#` and `;` start comments.
// Unknown or repeated keys are ConfigErrors.

RangingExperiment parse_ranging_config(std::istream& in);
RangingExperiment load_ranging_config(const std::filesystem::path& path);

LocalizationExperiment parse_localization_config(std::istream& in);
LocalizationExperiment load_localization_config(const std::filesystem::path& path);

} // namespace wusn
