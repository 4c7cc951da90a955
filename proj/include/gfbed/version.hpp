#ifndef GFBED_VERSION_HPP
#define GFBED_VERSION_HPP

#include <string_view>

namespace gfbed {

inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace gfbed

#endif  // GFBED_VERSION_HPP
