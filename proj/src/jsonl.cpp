#include "activeeval/jsonl.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>

#include "activeeval/errors.hpp"

namespace activeeval::jsonl {

void for_each(std::istream& in, const std::function<void(const Json&, std::size_t)>& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ValidationError(std::string("malformed JSON: ") + e.what(), number);
    }
    try {
      fn(record, number);
    } catch (const ValidationError& e) {
      if (e.line() != 0) throw;
      throw ValidationError(e.what(), number);
    }
  }
}

void for_each_file(const std::string& path,
                   const std::function<void(const Json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  for_each(in, fn);
}

void check_keys(const Json& record, std::initializer_list<std::string_view> required,
                std::initializer_list<std::string_view> optional, std::size_t line) {
  if (!record.is_object()) throw ValidationError("record must be a JSON object", line);
  for (auto key : required) {
    if (!record.contains(std::string(key))) {
      throw ValidationError("missing field '" + std::string(key) + "'", line);
    }
  }
  for (const auto& [key, value] : record.items()) {
    const bool known =
        std::find(required.begin(), required.end(), key) != required.end() ||
        std::find(optional.begin(), optional.end(), key) != optional.end();
    if (!known) throw ValidationError("unknown field '" + key + "'", line);
  }
}

std::string get_id(const Json& record, std::string_view key, std::size_t line) {
  const auto& v = record.at(std::string(key));
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ValidationError("field '" + std::string(key) + "' must be a string or integer", line);
}

double get_number(const Json& record, std::string_view key, std::size_t line) {
  const auto& v = record.at(std::string(key));
  if (!v.is_number()) {
    throw ValidationError("field '" + std::string(key) + "' must be a number", line);
  }
  return v.get<double>();
}

std::string get_string(const Json& record, std::string_view key, std::size_t line) {
  const auto& v = record.at(std::string(key));
  if (!v.is_string()) {
    throw ValidationError("field '" + std::string(key) + "' must be a string", line);
  }
  return v.get<std::string>();
}

}  // namespace activeeval::jsonl
