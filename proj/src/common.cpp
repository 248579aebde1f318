#include "warpp/common.hpp"

#include <cctype>
#include <cstdio>

namespace warpp {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json flatten(const Json& obj, const std::string& prefix) {
  Json out = Json::object();
  if (!obj.is_object()) {
    if (!prefix.empty()) out[prefix] = obj;
    return out;
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object() && !it->empty()) {
      const Json inner = flatten(*it, key);
      for (const auto& [k, v] : inner.items()) out[k] = v;
    } else {
      out[key] = *it;
    }
  }
  return out;
}

const Json* find_path(const Json& obj, std::string_view path) {
  const Json* cur = &obj;
  for (const auto& part : split(path, '.')) {
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(part);
    if (it == cur->end()) return nullptr;
    cur = &*it;
  }
  return cur;
}

void set_path(Json& obj, std::string_view path, Json value) {
  Json* cur = &obj;
  auto parts = split(path, '.');
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    Json& next = (*cur)[parts[i]];
    if (!next.is_object()) next = Json::object();
    cur = &next;
  }
  (*cur)[parts.back()] = std::move(value);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string trim_copy(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::size_t count_tokens(std::string_view text) {
  std::size_t n = 0;
  bool in_token = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

}  // namespace warpp
