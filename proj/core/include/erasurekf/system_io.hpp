#pragma once

#include <erasurekf/linear_system.hpp>

#include <filesystem>
#include <string>

namespace erasurekf {

/// Parses a JSON system document. Required fields "A", "C", "Q", "R",
/// "Sigma0" as rectangular row-major nested arrays of numbers; optional
/// "x0_mean" array (defaults to zero) and "angle_hint" object, either
/// {"numerator": r, "denominator": q} or {"irrational": true}.
///
/// Parsing does not validate the model assumptions; call validate() for
/// that. Throws ParseError with field context on malformed input.
LinearSystem parse_system(const std::string& text, const std::string& origin = "<string>");

/// Reads and parses a system spec file. Missing file throws ParseError
/// whose message starts with "no such file".
LinearSystem load_system(const std::filesystem::path& path);

/// Serializes a system to the same JSON schema load_system reads. Numbers
/// round-trip bit-exactly.
std::string format_system(const LinearSystem& sys);
void save_system(const LinearSystem& sys, const std::filesystem::path& path);

} // namespace erasurekf
