#include "oqmem/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace oqmem::io {

Node::Node(const Json& value, std::string path) : value_(&value), path_(std::move(path)) {}

std::string Node::child(std::string_view key) const {
  return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
}

void Node::fail(const std::string& message) const { throw SchemaError(path_, message); }
void Node::fail(std::string_view key, const std::string& message) const {
  throw SchemaError(child(key), message);
}

void Node::require_object() const {
  if (!value_->is_object()) fail("expected an object");
}

bool Node::has(std::string_view key) const {
  return value_->is_object() && value_->contains(std::string(key));
}

Node Node::at(std::string_view key) const {
  require_object();
  auto it = value_->find(std::string(key));
  if (it == value_->end()) fail(key, "required field is missing");
  return Node(*it, child(key));
}

std::optional<Node> Node::find(std::string_view key) const {
  if (!has(key)) return std::nullopt;
  return at(key);
}

double Node::as_number() const {
  if (!value_->is_number()) fail("expected a number");
  const double v = value_->get<double>();
  if (!std::isfinite(v)) fail("expected a finite number");
  return v;
}

double Node::number(std::string_view key) const { return at(key).as_number(); }

double Node::number_or(std::string_view key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::uint64_t Node::count(std::string_view key) const {
  const Node n = at(key);
  if (n.value().is_number_unsigned()) return n.value().get<std::uint64_t>();
  if (n.value().is_number_integer() && n.value().get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(n.value().get<std::int64_t>());
  if (n.value().is_number_float()) {
    const double v = n.value().get<double>();
    if (v >= 0 && v == std::floor(v) && v < 1.8e19) return static_cast<std::uint64_t>(v);
  }
  n.fail("expected a non-negative integer");
}

std::uint64_t Node::count_or(std::string_view key, std::uint64_t fallback) const {
  return has(key) ? count(key) : fallback;
}

bool Node::boolean_or(std::string_view key, bool fallback) const {
  if (!has(key)) return fallback;
  const Node n = at(key);
  if (!n.value().is_boolean()) n.fail("expected true or false");
  return n.value().get<bool>();
}

std::string Node::string(std::string_view key) const {
  const Node n = at(key);
  if (!n.value().is_string()) n.fail("expected a string");
  return n.value().get<std::string>();
}

std::string Node::string_or(std::string_view key, std::string fallback) const {
  return has(key) ? string(key) : fallback;
}

Eigen::Vector3d Node::vec3(std::string_view key) const {
  const Node n = at(key);
  if (!n.value().is_array() || n.value().size() != 3) n.fail("expected an array of 3 numbers");
  Eigen::Vector3d v;
  const auto e = n.elements();
  for (int i = 0; i < 3; ++i) v[i] = e[i].as_number();
  return v;
}

std::vector<double> Node::samples(std::string_view key) const {
  const Node n = at(key);
  std::vector<double> out;
  if (n.value().is_array()) {
    for (const auto& e : n.elements()) out.push_back(e.as_number());
  } else if (n.value().is_number()) {
    out.push_back(n.as_number());
  } else if (n.value().is_object()) {
    n.allow_only({"start", "stop", "count"});
    const double a = n.number("start"), b = n.number("stop");
    const std::uint64_t c = n.count("count");
    if (c == 0 || c > 10'000'000) n.fail("count", "expected between 1 and 10^7 samples");
    for (std::uint64_t i = 0; i < c; ++i)
      out.push_back(c == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(c - 1));
  } else {
    n.fail("expected a number, an array or {start, stop, count}");
  }
  if (out.empty()) n.fail("expected at least one value");
  return out;
}

std::vector<Node> Node::elements() const {
  if (!value_->is_array()) fail("expected an array");
  std::vector<Node> out;
  for (std::size_t i = 0; i < value_->size(); ++i)
    out.emplace_back((*value_)[i], path_ + "[" + std::to_string(i) + "]");
  return out;
}

void Node::allow_only(std::initializer_list<std::string_view> keys) const {
  require_object();
  for (auto it = value_->begin(); it != value_->end(); ++it)
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
      fail(it.key(), "unknown field");
}

namespace {

hubbard::Dot dot_field(const Node& n, std::string_view key) {
  const std::string name = n.string(key);
  const auto d = hubbard::parse_dot(name);
  if (!d) n.fail(key, "unknown dot '" + name + "' (expected T, B, 1, 2 or 3)");
  return *d;
}

template <typename Fn>
auto wrap(const Node& n, Fn&& fn) {
  try {
    return fn();
  } catch (const SchemaError&) {
    throw;
  } catch (const InvalidParameterError& e) {
    n.fail(e.what());
  } catch (const InvalidGeometryError& e) {
    n.fail(e.what());
  }
}

}  // namespace

hubbard::HubbardSystem read_system(const Node& n) {
  n.allow_only({"dots", "tunnel", "coulomb", "dielectric", "detunings", "compute_coulomb"});
  hubbard::HubbardSystem s;
  s.dielectric = n.number_or("dielectric", s.dielectric);
  if (auto dots = n.find("dots")) {
    for (const Node& d : dots->elements()) {
      d.allow_only({"name", "center", "widths"});
      hubbard::Orbital o;
      o.center = d.vec3("center");
      if (d.has("widths")) o.widths = d.vec3("widths");
      const auto dot = dot_field(d, "name");
      if (s.orbitals[hubbard::idx(dot)]) d.fail("name", "dot listed twice");
      s.orbitals[hubbard::idx(dot)] = o;
    }
  }
  if (auto t = n.find("tunnel")) {
    for (const Node& e : t->elements()) {
      e.allow_only({"a", "b", "t"});
      s.set_tunnel(dot_field(e, "a"), dot_field(e, "b"), e.number("t"));
    }
  }
  if (n.boolean_or("compute_coulomb", true)) wrap(n, [&] { s.compute_coulomb_from_orbitals(); });
  if (auto u = n.find("coulomb")) {
    for (const Node& e : u->elements()) {
      e.allow_only({"a", "b", "U"});
      s.set_coulomb(dot_field(e, "a"), dot_field(e, "b"), e.number("U"));
    }
  }
  if (auto d = n.find("detunings")) {
    d->allow_only({"O", "E", "23"});
    s.epsilon_O = d->number_or("O", 0);
    s.epsilon_E = d->number_or("E", 0);
    s.epsilon_23 = d->number_or("23", 0);
  }
  wrap(n, [&] { s.validate(); });
  return s;
}

electro::LayerStack read_stack(const Node& n) {
  n.allow_only({"layers", "top_bias", "back_bias", "schottky_barrier"});
  electro::LayerStack s = electro::LayerStack::default_accumulation();
  if (auto layers = n.find("layers")) {
    s.layers.clear();
    for (const Node& l : layers->elements()) {
      l.allow_only({"label", "material", "thickness", "free_charge", "donor_density_cm3",
                    "band_offset", "effective_mass", "dielectric"});
      const std::string material = l.string("material");
      electro::Layer layer = wrap(l, [&] {
        return electro::Layer::of(l.string_or("label", material), material, l.number("thickness"),
                                  l.boolean_or("free_charge", false));
      });
      layer.donor_density = l.number_or("donor_density_cm3", 0) / units::kPerNm3ToPerCm3;
      layer.band_offset = l.number_or("band_offset", layer.band_offset);
      layer.effective_mass = l.number_or("effective_mass", layer.effective_mass);
      layer.dielectric = l.number_or("dielectric", layer.dielectric);
      s.layers.push_back(layer);
    }
  }
  s.top_bias = n.number_or("top_bias", s.top_bias);
  s.back_bias = n.number_or("back_bias", s.back_bias);
  s.schottky_barrier = n.number_or("schottky_barrier", s.schottky_barrier);
  wrap(n, [&] { s.validate(); });
  return s;
}

electro::DeviceGeometry read_geometry(const Node& n) {
  n.allow_only({"z_dd", "pitch", "dot_separation", "saqdm_B", "saqdm_T", "gqd", "gate_plane_z",
                "dielectric"});
  electro::DeviceGeometry g;
  if (n.has("z_dd")) {
    g = electro::DeviceGeometry::stacked(n.number("z_dd"), n.number_or("pitch", 100),
                                         n.number_or("dot_separation", 10));
  } else {
    g.saqdm_B = n.vec3("saqdm_B");
    g.saqdm_T = n.vec3("saqdm_T");
    const auto gqd = n.at("gqd").elements();
    if (gqd.size() != 3) n.fail("gqd", "expected three positions");
    for (int i = 0; i < 3; ++i) {
      if (!gqd[i].value().is_array() || gqd[i].value().size() != 3)
        gqd[i].fail("expected an array of 3 numbers");
      const auto e = gqd[i].elements();
      g.gqd[i] = {e[0].as_number(), e[1].as_number(), e[2].as_number()};
    }
  }
  if (n.has("gate_plane_z")) g.gate_plane_z = n.number("gate_plane_z");
  g.dielectric = n.number_or("dielectric", g.dielectric);
  wrap(n, [&] { g.validate(); });
  return g;
}

electro::SolverOptions read_solver_options(const Node& n) {
  n.allow_only({"grid_spacing", "mixing", "max_iterations", "tolerance", "window_margin",
                "n_states"});
  electro::SolverOptions o;
  o.grid_spacing = n.number_or("grid_spacing", o.grid_spacing);
  o.mixing = n.number_or("mixing", o.mixing);
  o.max_iterations = static_cast<int>(n.count_or("max_iterations", o.max_iterations));
  o.tolerance = n.number_or("tolerance", o.tolerance);
  o.window_margin = n.number_or("window_margin", o.window_margin);
  o.n_states = static_cast<int>(n.count_or("n_states", o.n_states));
  if (!(o.grid_spacing > 0)) n.fail("grid_spacing", "must be positive");
  if (!(o.mixing > 0 && o.mixing <= 1)) n.fail("mixing", "must lie in (0, 1]");
  if (o.max_iterations < 1) n.fail("max_iterations", "must be at least 1");
  if (!(o.tolerance > 0)) n.fail("tolerance", "must be positive");
  return o;
}

noise::NoiseModel read_noise(const Node& n) {
  n.allow_only({"hyperfine_sigma_O", "hyperfine_sigma_E", "charge_sigma_O", "charge_sigma_E",
                "leakage_rate"});
  noise::NoiseModel m;
  m.hyperfine_sigma_O = n.number_or("hyperfine_sigma_O", 0);
  m.hyperfine_sigma_E = n.number_or("hyperfine_sigma_E", 0);
  m.charge_sigma_O = n.number_or("charge_sigma_O", 0);
  m.charge_sigma_E = n.number_or("charge_sigma_E", 0);
  m.leakage_rate = n.number_or("leakage_rate", 0);
  wrap(n, [&] { m.validate(); });
  return m;
}

hom::DetectorModel read_detector(const Node& n) {
  n.allow_only({"jitter_1", "jitter_2", "efficiency", "time_resolution"});
  hom::DetectorModel d;
  d.jitter_1 = n.number_or("jitter_1", 0);
  d.jitter_2 = n.number_or("jitter_2", d.jitter_1);
  d.efficiency = n.number_or("efficiency", 1);
  d.time_resolution = n.number_or("time_resolution", 0);
  wrap(n, [&] { d.validate(); });
  return d;
}

Json parse_document(const std::string& text, const std::string& source_name) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t pos = std::min<std::size_t>(e.byte, text.size());
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw SchemaError(source_name + ":" + std::to_string(line) + ":" + std::to_string(col),
                      "JSON syntax error");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int locate_key(const std::string& text, std::string_view key) {
  const std::string needle = "\"" + std::string(key) + "\"";
  const std::size_t pos = text.find(needle);
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

}  // namespace oqmem::io
