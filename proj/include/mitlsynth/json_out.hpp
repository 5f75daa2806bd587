#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

namespace mitlsynth {

using ordered_json = nlohmann::ordered_json;

// Every floating-point number is printed with 17 significant digits so that
// the written artifact round-trips bit-exactly.
std::string dump_json(const ordered_json& j);
void write_json_file(const std::string& path, const ordered_json& j);

std::string format_real(double v);

}  // namespace mitlsynth
