#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace skipshift {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sibling temp path unique to this thread, used for temp-then-rename commits.
std::filesystem::path temp_path_for(const std::filesystem::path& target);

/// Calls `writer` on a temp path and renames it onto `target` once it
/// returns; the temp file is removed if `writer` throws.
void commit_atomically(const std::filesystem::path& target,
                       const std::function<void(const std::filesystem::path&)>& writer);

void write_text_atomic(const std::filesystem::path& target, std::string_view contents);

std::string read_text(const std::filesystem::path& path);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace skipshift
