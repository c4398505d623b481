#pragma once

namespace acz {

inline constexpr const char* version_string = "1.0.0";
inline constexpr int config_schema_version = 1;

}  // namespace acz
