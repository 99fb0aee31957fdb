#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace becopt {

// Round-trip exact, locale-independent double formatting. All CSV and report
// output goes through this so reruns with the same seed are byte-identical.
inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// FNV-1a 64-bit content digest, hex-encoded. Used to detect config or
// scenario edits between a campaign and its resume.
inline std::string content_digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace becopt
