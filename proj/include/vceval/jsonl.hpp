#pragma once

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vceval::jsonl {

using nlohmann::json;

/// Calls `on_record` for each line of a JSONL file (1-based line numbers).
/// Blank lines and unparsable lines raise MalformedRecord; a missing file raises MissingFile.
void read(const std::filesystem::path& path,
          const std::function<void(const json& record, std::size_t line)>& on_record);

/// Writes one compact JSON object per line, keys sorted, trailing newline after each record.
void write(const std::filesystem::path& path, const std::vector<json>& records);

std::string dump_line(const json& record);

/// Typed field access for one record with strict key checking.
class Record {
 public:
  Record(const json& j, std::size_t line, std::string_view file);

  /// Rejects any key outside `allowed`.
  void allow_only(std::initializer_list<std::string_view> allowed) const;

  [[nodiscard]] std::string string(std::string_view key) const;
  [[nodiscard]] std::optional<std::string> nullable_string(std::string_view key) const;
  [[nodiscard]] double number(std::string_view key) const;
  [[nodiscard]] long long integer(std::string_view key) const;
  [[nodiscard]] const json& array(std::string_view key) const;
  [[nodiscard]] std::vector<std::string> string_array(std::string_view key) const;

  [[noreturn]] void fail(const std::string& what) const;
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  const json& field(std::string_view key) const;

  const json& j_;
  std::size_t line_;
  std::string file_;
};

}  // namespace vceval::jsonl
