#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace warpp {

using Json = nlohmann::json;

inline constexpr std::string_view kEngineVersion = "0.3.1";

// Base of every error the engine raises. Callers that only need a message can
// catch this; the subclasses carry the structured detail.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(int line, int col, std::string expected)
      : Error("syntax error at " + std::to_string(line) + ":" +
              std::to_string(col) + ": expected " + expected),
        line_(line),
        col_(col),
        expected_(std::move(expected)) {}

  int line() const { return line_; }
  int col() const { return col_; }
  const std::string& expected() const { return expected_; }

 private:
  int line_;
  int col_;
  std::string expected_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

// splitmix64 finalizer; used to derive independent per-call seeds so that
// concurrent tasks never share a generator.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t index = 0) {
  return mix64(mix64(base ^ fnv1a(tag)) + index);
}

std::string hex64(std::uint64_t v);

// Flattens nested objects into dotted keys. Arrays and scalars are leaves.
Json flatten(const Json& obj, const std::string& prefix = {});

// Looks up a dotted path inside a nested object; nullptr when absent.
const Json* find_path(const Json& obj, std::string_view path);

void set_path(Json& obj, std::string_view path, Json value);

std::vector<std::string> split(std::string_view s, char sep);

std::string trim_copy(std::string_view s);

// Whitespace-delimited token count.
std::size_t count_tokens(std::string_view text);

}  // namespace warpp
