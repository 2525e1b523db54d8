#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace cnp {

using Point = std::array<double, 3>;
using Vec3 = std::array<double, 3>;

using ScalarField = std::function<double(const Point&)>;
using VectorField = std::function<Vec3(const Point&)>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

/// Base for all library errors; carries a short machine-readable category.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

} // namespace cnp
