#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fiova::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes to a temporary sibling then renames it over `path`, so readers see
// either the old document or the new one, never a partial write.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace fiova::io
