#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hybrist {

/// Road model families compared by the simulator.
enum class ModelKind : std::uint8_t { HMM, UMM, HWM };

enum class VehicleClass : std::uint8_t { Metrobus, Car };

/// Set of vehicle classes permitted on an edge or served by a station.
enum class ClassSet : std::uint8_t { Metrobus = 1, Car = 2, Both = 3 };

constexpr bool permits(ClassSet set, VehicleClass c) noexcept {
  const auto bit = c == VehicleClass::Metrobus ? 1u : 2u;
  return (static_cast<unsigned>(set) & bit) != 0;
}

std::string_view to_string(ModelKind kind) noexcept;
std::string_view to_string(VehicleClass c) noexcept;
std::string_view to_string(ClassSet set) noexcept;
ModelKind parse_model_kind(std::string_view text);
ClassSet parse_class_set(std::string_view text);

enum class NodeId : std::uint32_t {};
enum class EdgeId : std::uint32_t {};
enum class VehicleId : std::uint32_t {};

constexpr std::uint32_t index(NodeId id) noexcept { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t index(EdgeId id) noexcept { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t index(VehicleId id) noexcept { return static_cast<std::uint32_t>(id); }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) noexcept { return {a.x * s, a.y * s}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double distance(Vec2 a, Vec2 b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No class-permitted path between two nodes.
class NoRoute : public Error {
 public:
  using Error::Error;
};

/// A vehicle moved past the end of the last edge of its route.
class RouteExhausted : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A value is well-formed but breaks a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Query time lies outside the span covered by a trace.
class UnknownTime : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

}  // namespace hybrist
