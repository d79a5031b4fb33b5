#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace scalebench {

using Json = nlohmann::json;

// Compact, key-sorted, single-line form. nlohmann's object type is a std::map,
// so keys already come out sorted; this pins the remaining dump options.
std::string canonical_dump(const Json& value);

std::uint64_t fnv1a64(std::string_view bytes);

std::string hex64(std::uint64_t value);

}  // namespace scalebench
