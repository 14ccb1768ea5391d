#include "pinn/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pinn/error.hpp"

namespace pinn {

namespace {

constexpr const char* kMagic = "pinnkit-archive 1";

void check_key(const std::string& key) {
  if (key.empty() || key.find_first_of(" \t\n\r") != std::string::npos)
    throw Error("invalid archive key: '" + key + "'");
}

}  // namespace

void Archive::put(const std::string& key, std::vector<double> values) {
  check_key(key);
  strings_.erase(key);
  arrays_[key] = std::move(values);
}

void Archive::put_string(const std::string& key, std::string value) {
  check_key(key);
  if (value.find('\n') != std::string::npos)
    throw Error("invalid archive value: newline in '" + key + "'");
  arrays_.erase(key);
  strings_[key] = std::move(value);
}

bool Archive::has(const std::string& key) const {
  return arrays_.count(key) != 0 || strings_.count(key) != 0;
}

const std::vector<double>& Archive::array(const std::string& key) const {
  auto it = arrays_.find(key);
  if (it == arrays_.end()) throw Error("missing archive entry: " + key);
  return it->second;
}

const std::string& Archive::string(const std::string& key) const {
  auto it = strings_.find(key);
  if (it == strings_.end()) throw Error("missing archive entry: " + key);
  return it->second;
}

double Archive::scalar(const std::string& key) const {
  const auto& a = array(key);
  if (a.size() != 1) throw Error("archive entry is not a scalar: " + key);
  return a[0];
}

std::string Archive::to_text() const {
  std::string out = kMagic;
  out += '\n';
  char buf[64];
  for (const auto& [key, vals] : arrays_) {
    out += key;
    out += " a ";
    out += std::to_string(vals.size());
    for (double v : vals) {
      std::snprintf(buf, sizeof buf, " %a", v);
      out += buf;
    }
    out += '\n';
  }
  for (const auto& [key, s] : strings_) {
    out += key;
    out += " s ";
    out += s;
    out += '\n';
  }
  return out;
}

Archive Archive::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw Error("invalid archive: bad header");
  Archive ar;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto sp1 = line.find(' ');
    if (sp1 == std::string::npos || sp1 + 2 >= line.size() + 1)
      throw Error("invalid archive: line " + std::to_string(lineno));
    const std::string key = line.substr(0, sp1);
    const char kind = line[sp1 + 1];
    if (kind == 's') {
      ar.strings_[key] = sp1 + 3 <= line.size() ? line.substr(sp1 + 3) : "";
    } else if (kind == 'a') {
      const char* p = line.c_str() + sp1 + 2;
      char* end = nullptr;
      const unsigned long long n = std::strtoull(p, &end, 10);
      if (end == p) throw Error("invalid archive: line " + std::to_string(lineno));
      std::vector<double> vals;
      vals.reserve(n);
      p = end;
      for (unsigned long long i = 0; i < n; ++i) {
        const double v = std::strtod(p, &end);
        if (end == p)
          throw Error("invalid archive: short array at line " +
                      std::to_string(lineno));
        vals.push_back(v);
        p = end;
      }
      ar.arrays_[key] = std::move(vals);
    } else {
      throw Error("invalid archive: line " + std::to_string(lineno));
    }
  }
  return ar;
}

void Archive::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write archive: " + path.string());
  out << to_text();
  if (!out) throw Error("cannot write archive: " + path.string());
}

Archive Archive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read archive: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

}  // namespace pinn
