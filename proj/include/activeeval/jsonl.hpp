#pragma once

// Line-delimited JSON helpers with line-numbered validation errors.

#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>

#include "json.hpp"

namespace activeeval::jsonl {

using Json = nlohmann::json;

// Calls `fn(record, line_number)` for every non-blank line. Parse errors and
// any ValidationError thrown by `fn` without a line number are re-thrown with
// the line attached.
void for_each(std::istream& in, const std::function<void(const Json&, std::size_t)>& fn);

void for_each_file(const std::string& path,
                   const std::function<void(const Json&, std::size_t)>& fn);

// Rejects records that are not objects, lack a required key, or carry a key
// outside required + optional.
void check_keys(const Json& record, std::initializer_list<std::string_view> required,
                std::initializer_list<std::string_view> optional, std::size_t line);

// String field; integers are accepted and stringified (system ids are often
// numeric in source datasets).
std::string get_id(const Json& record, std::string_view key, std::size_t line);
double get_number(const Json& record, std::string_view key, std::size_t line);
std::string get_string(const Json& record, std::string_view key, std::size_t line);

}  // namespace activeeval::jsonl
