#include "mirror/store/binary_io.hpp"

#include <array>
#include <cstring>

#include <openssl/evp.h>

#include "mirror/core/hash.hpp"

namespace mirror::store {

namespace fs = std::filesystem;

BinaryWriter::BinaryWriter(const fs::path& path, std::string_view magic, std::uint32_t version)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  if (magic.size() != 8) throw Error(ErrorCode::InvalidArgument, "file magic must be 8 bytes");
  out_.write(magic.data(), 8);
  put(version);
}

void BinaryWriter::put_string(std::string_view s) {
  put<std::uint64_t>(s.size());
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::close() {
  out_.flush();
  if (!out_) throw Error(ErrorCode::IoError, "write failed for " + path_.string());
  out_.close();
}

BinaryReader::BinaryReader(const fs::path& path, std::string_view magic, std::uint32_t version)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::error_code ec;
  size_ = fs::file_size(path, ec);
  char head[8] = {};
  in_.read(head, 8);
  if (!in_ || std::string_view(head, 8) != magic)
    throw Error(ErrorCode::UnknownVersion, path.string() + ": not a " + std::string(magic.substr(0, 7)) + " file");
  const auto found = get<std::uint32_t>();
  if (found != version)
    throw Error(ErrorCode::UnknownVersion,
                path.string() + ": format version " + std::to_string(found) + ", expected " + std::to_string(version));
}

std::string BinaryReader::get_string() {
  const auto n = get<std::uint64_t>();
  check_remaining(n);
  std::string s(n, '\0');
  read(s.data(), n);
  return s;
}

void BinaryReader::read(void* data, std::size_t bytes) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
  if (!in_) throw Error(ErrorCode::IoError, path_.string() + ": truncated");
}

void BinaryReader::check_remaining(std::uint64_t bytes) {
  const auto pos = static_cast<std::uint64_t>(in_.tellg());
  if (pos > size_ || bytes > size_ - pos) throw Error(ErrorCode::IoError, path_.string() + ": truncated");
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string file_sha256(const fs::path& path) { return sha256_hex(read_file(path)); }

void write_file(const fs::path& path, std::string_view bytes) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace mirror::store
