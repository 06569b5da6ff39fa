#include "config.hpp"

#include <algorithm>
#include <climits>
#include <cmath>

namespace semidiag::cli {

namespace {

std::string type_name(const json& v) { return v.type_name(); }

bool parse_complex(const json& v, cplx& out) {
  if (v.is_number()) {
    out = v.get<double>();
    return true;
  }
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    out = cplx(v[0].get<double>(), v[1].get<double>());
    return true;
  }
  return false;
}

}  // namespace

json complex_to_json(cplx z) {
  if (z.imag() == 0.0) return z.real();
  return json::array({z.real(), z.imag()});
}

json parse_config(const std::string& text, const std::string& source) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw ConfigError(source + ": top level must be a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    const size_t at = std::min<size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + at, '\n');
    const size_t nl = text.rfind('\n', at == 0 ? 0 : at - 1);
    const size_t col = nl == std::string::npos || at == 0 ? at + 1 : at - nl;
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON (" +
                      e.what() + ")");
  }
}

Section::Section(const json& in, std::string path) : in_(in), path_(std::move(path)) {
  if (!in_.is_null() && !in_.is_object()) throw ConfigError(path_ + ": expected an object, got " + type_name(in_));
  if (in_.is_null()) in_ = json::object();
}

void Section::fail(const std::string& key, const std::string& what) const {
  throw ConfigError(path_ + "/" + key + ": " + what);
}

bool Section::has(const std::string& key) const { return in_.contains(key); }

const json* Section::find(const std::string& key) {
  if (std::find(used_.begin(), used_.end(), key) == used_.end()) used_.push_back(key);
  auto it = in_.find(key);
  return it == in_.end() ? nullptr : &*it;
}

double Section::number(const std::string& key, double fallback) {
  const json* v = find(key);
  double x = fallback;
  if (v) {
    if (!v->is_number()) fail(key, "expected a number, got " + type_name(*v));
    x = v->get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
  }
  echo_[key] = x;
  return x;
}

double Section::number(const std::string& key) {
  if (!has(key)) fail(key, "required number is missing");
  return number(key, 0.0);
}

int Section::integer(const std::string& key, int fallback, int min_value) {
  const json* v = find(key);
  long long x = fallback;
  if (v) {
    if (!v->is_number_integer()) fail(key, "expected an integer, got " + type_name(*v));
    x = v->get<long long>();
  }
  if (x < min_value || x > INT_MAX) fail(key, "must be an integer >= " + std::to_string(min_value));
  echo_[key] = x;
  return static_cast<int>(x);
}

bool Section::flag(const std::string& key, bool fallback) {
  const json* v = find(key);
  bool b = fallback;
  if (v) {
    if (!v->is_boolean()) fail(key, "expected true or false, got " + type_name(*v));
    b = v->get<bool>();
  }
  echo_[key] = b;
  return b;
}

std::string Section::text(const std::string& key, const std::string& fallback) {
  const json* v = find(key);
  std::string s = fallback;
  if (v) {
    if (!v->is_string()) fail(key, "expected a string, got " + type_name(*v));
    s = v->get<std::string>();
  }
  echo_[key] = s;
  return s;
}

std::string Section::text(const std::string& key) {
  if (!has(key)) fail(key, "required string is missing");
  return text(key, "");
}

cplx Section::complex(const std::string& key, cplx fallback) {
  const json* v = find(key);
  cplx z = fallback;
  if (v && !parse_complex(*v, z)) fail(key, "expected a number or [re, im]");
  echo_[key] = complex_to_json(z);
  return z;
}

std::vector<double> Section::numbers(const std::string& key, const std::vector<double>& fallback, bool positive) {
  const json* v = find(key);
  std::vector<double> out = fallback;
  if (v) {
    if (!v->is_array() || v->empty()) fail(key, "expected a non-empty array of numbers");
    out.clear();
    for (const auto& e : *v) {
      if (!e.is_number()) fail(key, "array entries must be numbers");
      out.push_back(e.get<double>());
    }
  }
  for (double x : out)
    if (!std::isfinite(x) || (positive && !(x > 0.0))) fail(key, positive ? "entries must be positive" : "entries must be finite");
  echo_[key] = out;
  return out;
}

std::vector<cplx> Section::complexes(const std::string& key, const std::vector<cplx>& fallback) {
  const json* v = find(key);
  std::vector<cplx> out = fallback;
  if (v) {
    if (!v->is_array()) fail(key, "expected an array of numbers or [re, im] pairs");
    out.clear();
    for (const auto& e : *v) {
      cplx z;
      if (!parse_complex(e, z)) fail(key, "entries must be numbers or [re, im] pairs");
      out.push_back(z);
    }
  }
  json arr = json::array();
  for (cplx z : out) arr.push_back(complex_to_json(z));
  echo_[key] = arr;
  return out;
}

json Section::raw(const std::string& key) {
  const json* v = find(key);
  if (!v) fail(key, "required value is missing");
  echo_[key] = *v;
  return *v;
}

Section Section::child(const std::string& key) {
  const json* v = find(key);
  return Section(v ? *v : json(), path_ + "/" + key);
}

std::vector<Section> Section::children(const std::string& key) {
  const json* v = find(key);
  std::vector<Section> out;
  if (!v) return out;
  if (!v->is_array()) fail(key, "expected an array of objects");
  for (size_t i = 0; i < v->size(); ++i) out.emplace_back((*v)[i], path_ + "/" + key + "/" + std::to_string(i));
  return out;
}

void Section::adopt(const std::string& key, const Section& c) {
  c.finish();
  echo_[key] = c.echo();
}

void Section::adopt(const std::string& key, const std::vector<Section>& list) {
  json arr = json::array();
  for (const auto& c : list) {
    c.finish();
    arr.push_back(c.echo());
  }
  echo_[key] = arr;
}

void Section::finish() const {
  for (auto it = in_.begin(); it != in_.end(); ++it)
    if (std::find(used_.begin(), used_.end(), it.key()) == used_.end())
      throw ConfigError(path_ + "/" + it.key() + ": unknown key");
}

}  // namespace semidiag::cli
