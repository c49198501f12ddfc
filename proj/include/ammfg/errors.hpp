#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ammfg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A trade, deposit or impact would empty or overdraw a pool reserve.
class DegenerateReserves : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

// Controlled dynamics left the state grid (grid bounds are too tight).
class GridOverflow : public Error {
public:
    using Error::Error;
};

class NotConverged : public Error {
public:
    NotConverged(const std::string& what, std::vector<double> residuals)
        : Error(what), residuals_(std::move(residuals)) {}

    const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
    std::vector<double> residuals_;
};

class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& reason)
        : Error(key.empty() ? reason : key + ": " + reason), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

} // namespace ammfg
