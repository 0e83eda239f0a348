// SPDX-License-Identifier: Apache-2.0
// Apache-2.0, Copyright 2026 The meltcheck Authors

#include "common/files.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "common/error.hpp"

namespace meltcheck {
namespace fs = std::filesystem;

namespace {

[[noreturn]] void throw_io(const std::string& what, const fs::path& path) {
  throw Error(ErrorCode::io, what + " '" + path.string() + "': " + std::strerror(errno));
}

void write_all(int fd, const char* data, std::size_t size, const fs::path& path) {
  while (size > 0) {
    ssize_t n = ::write(fd, data, size);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_io("write", path);
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

void write_atomic_raw(const fs::path& path, const char* data, std::size_t size) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw_io("open", tmp);
  write_all(fd, data, size, tmp);
  ::fsync(fd);
  ::close(fd);
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorCode::io, "rename onto '" + path.string() + "' failed");
  }
}

}  // namespace

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("open", path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("open", path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
  std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::invalid_argument, path.string() + ": " + e.what());
  }
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  write_atomic_raw(path, contents.data(), contents.size());
}

void write_file_atomic(const fs::path& path, const std::vector<std::uint8_t>& contents) {
  write_atomic_raw(path, reinterpret_cast<const char*>(contents.data()), contents.size());
}

void append_line_durable(const fs::path& path, std::string_view line) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw_io("open", path);
  std::string buf(line);
  buf.push_back('\n');
  try {
    write_all(fd, buf.data(), buf.size(), path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    throw_io("fsync", path);
  }
  ::close(fd);
}

std::string to_jsonl(const nlohmann::json& value) { return value.dump(); }

std::vector<JsonlLine> read_jsonl(const fs::path& path) {
  std::vector<JsonlLine> lines;
  if (!fs::exists(path)) return lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("open", path);
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    JsonlLine line{number, raw, {}, true};
    try {
      line.value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
      line.parse_ok = false;
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace meltcheck
