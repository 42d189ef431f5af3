#pragma once

// Coefficient data of the two-state motor system: the potential acting on
// state 1 (optionally a second potential on state 2) and the switching rates.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "homog/errors.hpp"
#include "homog/periodic_field.hpp"

namespace homog {

template <int Dim>
struct MotorModel {
  PeriodicField<Dim> psi1;
  std::optional<PeriodicField<Dim>> psi2;  ///< absent: state 2 feels no drift
  PeriodicField<Dim> nu1;
  PeriodicField<Dim> nu2;
  std::string name = "custom";

  static constexpr int dimension = Dim;

  bool two_potential() const noexcept { return psi2.has_value(); }

  std::uint64_t fingerprint() const {
    std::uint64_t h = psi1.fingerprint();
    h = nu1.fingerprint(h);
    h = nu2.fingerprint(h);
    if (psi2) h = psi2->fingerprint(h ^ 0x9e3779b97f4a7c15ULL);
    return h;
  }
};

using MotorModel1 = MotorModel<1>;

/// Checks positivity of the switching rates and returns the model unchanged.
template <int Dim>
MotorModel<Dim> validate(MotorModel<Dim> model) {
  if (!(model.nu1.min() > 0.0)) {
    throw NonPositiveRate("nu1 must be positive everywhere (min sample = " +
                          std::to_string(model.nu1.min()) + ")");
  }
  if (!(model.nu2.min() > 0.0)) {
    throw NonPositiveRate("nu2 must be positive everywhere (min sample = " +
                          std::to_string(model.nu2.min()) + ")");
  }
  return model;
}

template <int Dim>
MotorModel<Dim> make_motor_model(PeriodicField<Dim> psi1, std::optional<PeriodicField<Dim>> psi2,
                                 PeriodicField<Dim> nu1, PeriodicField<Dim> nu2,
                                 std::string name = "custom") {
  return validate(MotorModel<Dim>{std::move(psi1), std::move(psi2), std::move(nu1),
                                  std::move(nu2), std::move(name)});
}

/// One coefficient given either as raw samples or as a finite Fourier series
///   f(y) = constant + sum_k cos[k-1] cos(2 pi k y) + sin[k-1] sin(2 pi k y).
struct FieldSpec {
  double constant = 0.0;
  std::vector<double> cos;
  std::vector<double> sin;
  std::optional<std::vector<double>> samples;

  PeriodicField1 build(std::size_t n) const {
    if (samples) return PeriodicField1(*samples);
    std::vector<double> s(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double y = static_cast<double>(j) / static_cast<double>(n);
      double v = constant;
      for (std::size_t k = 0; k < cos.size(); ++k)
        v += cos[k] * std::cos(2.0 * std::numbers::pi * static_cast<double>(k + 1) * y);
      for (std::size_t k = 0; k < sin.size(); ++k)
        v += sin[k] * std::sin(2.0 * std::numbers::pi * static_cast<double>(k + 1) * y);
      s[j] = v;
    }
    return PeriodicField1(std::move(s));
  }
};

struct ModelSpec {
  std::string name = "custom";
  std::size_t n = 128;
  FieldSpec psi;
  std::optional<FieldSpec> psi2;
  FieldSpec nu1;
  FieldSpec nu2;
};

inline MotorModel1 build_model(const ModelSpec& spec) {
  std::optional<PeriodicField1> psi2;
  if (spec.psi2) psi2 = spec.psi2->build(spec.n);
  return make_motor_model<1>(spec.psi.build(spec.n), std::move(psi2), spec.nu1.build(spec.n),
                             spec.nu2.build(spec.n), spec.name);
}

/// Named presets.  None comes from measured motor data; they are chosen to
/// exercise the symmetric, analytic, and ratchet regimes.
inline std::optional<ModelSpec> preset_spec(const std::string& name, std::size_t n = 128) {
  ModelSpec s;
  s.name = name;
  s.n = n;
  if (name == "flat") {
    s.nu1.constant = 1.0;
    s.nu2.constant = 1.0;
  } else if (name == "symmetric") {
    s.psi.cos = {1.0};
    s.nu1.constant = 1.0;
    s.nu2.constant = 1.0;
  } else if (name == "asymmetric-ratchet") {
    s.psi.sin = {0.7, 0.35};
    s.nu1.constant = 1.5;
    s.nu1.cos = {1.0};
    s.nu2.constant = 1.5;
    s.nu2.cos = {-1.0};
  } else if (name == "two-potential") {
    s.psi.sin = {0.7, 0.35};
    s.psi2 = FieldSpec{};
    s.psi2->cos = {0.4};
    s.nu1.constant = 1.5;
    s.nu1.cos = {1.0};
    s.nu2.constant = 1.5;
    s.nu2.cos = {-1.0};
  } else {
    return std::nullopt;
  }
  return s;
}

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"flat", "symmetric", "asymmetric-ratchet",
                                              "two-potential"};
  return names;
}

inline MotorModel1 preset(const std::string& name, std::size_t n = 128) {
  auto s = preset_spec(name, n);
  if (!s) throw ValidationError("unknown model preset '" + name + "'");
  return build_model(*s);
}

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_number(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ValidationError("model spec: key '" + key + "' expects a number, got '" + text + "'");
  }
  if (trim(text.substr(used)).size() != 0)
    throw ValidationError("model spec: trailing characters in value of '" + key + "'");
  return v;
}

inline std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::string t = trim(text);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    throw ValidationError("model spec: key '" + key + "' expects a list [a, b, ...]");
  t = t.substr(1, t.size() - 2);
  std::vector<double> out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number(item, key));
  }
  return out;
}

}  // namespace detail

/// Parses the flat key-value model description:
///
///   # comment
///   preset = asymmetric-ratchet   # optional starting point, must come first
///   N = 128
///   psi.const = 0.0
///   psi.sin = [0.7, 0.35]
///   psi.cos = [...]
///   psi.samples = [...]           # overrides the Fourier form
///   psi2.*, nu1.*, nu2.*          # same sub-keys
///   name = my-model
inline ModelSpec parse_model_spec(std::istream& in) {
  ModelSpec spec;
  spec.name = "custom";
  std::string line;
  int lineno = 0;
  bool saw_other = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("model spec line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "preset") {
      if (saw_other) throw ValidationError("model spec: 'preset' must precede other keys");
      auto p = preset_spec(value, spec.n);
      if (!p) throw ValidationError("model spec: unknown preset '" + value + "'");
      spec = *p;
      continue;
    }
    saw_other = true;
    if (key == "N") {
      const double v = detail::parse_number(value, key);
      if (v < 8 || v != std::floor(v)) throw InvalidField("model spec: N must be an integer >= 8");
      spec.n = static_cast<std::size_t>(v);
      continue;
    }
    if (key == "name") {
      spec.name = value;
      continue;
    }
    const auto dot = key.find('.');
    if (dot == std::string::npos) throw ValidationError("model spec: unknown key '" + key + "'");
    const std::string field = key.substr(0, dot);
    const std::string part = key.substr(dot + 1);
    FieldSpec* target = nullptr;
    if (field == "psi" || field == "psi1") {
      target = &spec.psi;
    } else if (field == "psi2") {
      if (!spec.psi2) spec.psi2 = FieldSpec{};
      target = &*spec.psi2;
    } else if (field == "nu1") {
      target = &spec.nu1;
    } else if (field == "nu2") {
      target = &spec.nu2;
    } else {
      throw ValidationError("model spec: unknown field '" + field + "'");
    }
    if (part == "const") {
      target->constant = detail::parse_number(value, key);
    } else if (part == "cos") {
      target->cos = detail::parse_list(value, key);
    } else if (part == "sin") {
      target->sin = detail::parse_list(value, key);
    } else if (part == "samples") {
      target->samples = detail::parse_list(value, key);
    } else {
      throw ValidationError("model spec: unknown sub-key '" + part + "'");
    }
  }
  return spec;
}

/// Resolves a preset name or a path to a model description file.
inline MotorModel1 load_model(const std::string& preset_or_path, std::size_t n = 128) {
  if (auto p = preset_spec(preset_or_path, n)) return build_model(*p);
  std::ifstream in(preset_or_path);
  if (!in) throw ValidationError("model '" + preset_or_path + "' is neither a preset nor a readable file");
  return build_model(parse_model_spec(in));
}

}  // namespace homog
