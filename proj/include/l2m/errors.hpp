#pragma once

#include <stdexcept>
#include <string>

namespace l2m {

// Malformed or unusable input data (files, manifests, label ranges).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure (solver did not converge, NaN loss, zero extent).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace l2m
