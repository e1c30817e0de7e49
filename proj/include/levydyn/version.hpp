#pragma once

namespace levydyn {
inline constexpr const char* version_string = "levydyn 0.1.0";
}
