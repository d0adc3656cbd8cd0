#pragma once

#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "oqmem/electrostatics.hpp"
#include "oqmem/errors.hpp"
#include "oqmem/hubbard.hpp"
#include "oqmem/interference.hpp"
#include "oqmem/noise.hpp"

// JSON document readers. Field errors carry a dotted path so the CLI can
// point at the offending key; unknown keys are rejected.

namespace oqmem::io {

using Json = nlohmann::ordered_json;

class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message)
      : Error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)),
        message_(message) {}
  const std::string& path() const { return path_; }
  const std::string& message() const { return message_; }

 private:
  std::string path_;
  std::string message_;
};

class IoError : public Error {
  using Error::Error;
};

/// Read-only view of one JSON object with its location in the document.
class Node {
 public:
  Node(const Json& value, std::string path);

  const std::string& path() const { return path_; }
  const Json& value() const { return *value_; }
  bool has(std::string_view key) const;
  Node at(std::string_view key) const;
  std::optional<Node> find(std::string_view key) const;

  double number(std::string_view key) const;
  double number_or(std::string_view key, double fallback) const;
  std::uint64_t count(std::string_view key) const;
  std::uint64_t count_or(std::string_view key, std::uint64_t fallback) const;
  bool boolean_or(std::string_view key, bool fallback) const;
  std::string string(std::string_view key) const;
  std::string string_or(std::string_view key, std::string fallback) const;
  Eigen::Vector3d vec3(std::string_view key) const;
  /// Either an explicit array or {"start", "stop", "count"}.
  std::vector<double> samples(std::string_view key) const;

  std::vector<Node> elements() const;  ///< for array nodes
  double as_number() const;

  void require_object() const;
  void allow_only(std::initializer_list<std::string_view> keys) const;
  [[noreturn]] void fail(const std::string& message) const;
  [[noreturn]] void fail(std::string_view key, const std::string& message) const;

 private:
  std::string child(std::string_view key) const;
  const Json* value_;
  std::string path_;
};

hubbard::HubbardSystem read_system(const Node& node);
electro::LayerStack read_stack(const Node& node);
electro::DeviceGeometry read_geometry(const Node& node);
electro::SolverOptions read_solver_options(const Node& node);
noise::NoiseModel read_noise(const Node& node);
hom::DetectorModel read_detector(const Node& node);

/// Parses text, reporting syntax errors with line and column.
Json parse_document(const std::string& text, const std::string& source_name);
std::string read_file(const std::string& path);
/// Line number (1-based) of the first occurrence of "key" in text, or 0.
int locate_key(const std::string& text, std::string_view key);

}  // namespace oqmem::io
