#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace itfem {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Base class for all errors raised by the library. The stage tag names the
/// pipeline step that failed (e.g. "mesh", "mapping", "solver").
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), message_(what) {}

  const std::string& stage() const noexcept { return stage_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string stage_;
  std::string message_;
};

struct GeometryError : Error {
  explicit GeometryError(const std::string& what) : Error("geometry", what) {}
};

struct MeshError : Error {
  explicit MeshError(const std::string& what) : Error("mesh", what) {}
};

struct MappingError : Error {
  explicit MappingError(const std::string& what) : Error("mapping", what) {}
};

struct QuadratureError : Error {
  explicit QuadratureError(const std::string& what) : Error("quadrature", what) {}
};

struct AssemblyError : Error {
  explicit AssemblyError(const std::string& what) : Error("assembly", what) {}
};

struct SolverError : Error {
  explicit SolverError(const std::string& what) : Error("solver", what) {}
};

struct Box {
  Vec3 lo = Vec3::Constant(-2.0);
  Vec3 hi = Vec3::Constant(2.0);

  bool contains(const Vec3& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
};

}  // namespace itfem
