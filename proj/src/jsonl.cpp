#include "vceval/jsonl.hpp"

#include <fstream>

#include "vceval/error.hpp"

namespace vceval::jsonl {

void read(const std::filesystem::path& path,
          const std::function<void(const json&, std::size_t)>& on_record) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      throw Error(ErrorCode::MalformedRecord,
                  path.filename().string() + " line " + std::to_string(line_no) + ": blank line");
    }
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::MalformedRecord,
                  path.filename().string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.is_object()) {
      throw Error(ErrorCode::MalformedRecord, path.filename().string() + " line " +
                                                  std::to_string(line_no) + ": not an object");
    }
    on_record(record, line_no);
  }
}

std::string dump_line(const json& record) {
  return record.dump(-1, ' ', false, json::error_handler_t::strict);
}

void write(const std::filesystem::path& path, const std::vector<json>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& r : records) out << dump_line(r) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Record::Record(const json& j, std::size_t line, std::string_view file)
    : j_(j), line_(line), file_(file) {}

void Record::fail(const std::string& what) const {
  throw Error(ErrorCode::MalformedRecord, file_ + " line " + std::to_string(line_) + ": " + what);
}

void Record::allow_only(std::initializer_list<std::string_view> allowed) const {
  for (const auto& [key, value] : j_.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) fail("unknown key '" + key + "'");
  }
}

const json& Record::field(std::string_view key) const {
  const auto it = j_.find(std::string(key));
  if (it == j_.end()) fail("missing key '" + std::string(key) + "'");
  return *it;
}

std::string Record::string(std::string_view key) const {
  const auto& v = field(key);
  if (!v.is_string()) fail("'" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

std::optional<std::string> Record::nullable_string(std::string_view key) const {
  const auto it = j_.find(std::string(key));
  if (it == j_.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) fail("'" + std::string(key) + "' must be a string or null");
  return it->get<std::string>();
}

double Record::number(std::string_view key) const {
  const auto& v = field(key);
  if (!v.is_number()) fail("'" + std::string(key) + "' must be a number");
  return v.get<double>();
}

long long Record::integer(std::string_view key) const {
  const auto& v = field(key);
  if (!v.is_number_integer()) fail("'" + std::string(key) + "' must be an integer");
  return v.get<long long>();
}

const json& Record::array(std::string_view key) const {
  const auto& v = field(key);
  if (!v.is_array()) fail("'" + std::string(key) + "' must be an array");
  return v;
}

std::vector<std::string> Record::string_array(std::string_view key) const {
  std::vector<std::string> out;
  for (const auto& v : array(key)) {
    if (!v.is_string()) fail("'" + std::string(key) + "' must contain strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace vceval::jsonl
