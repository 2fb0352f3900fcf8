#pragma once

#include <stdexcept>
#include <string>

namespace qsl {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidHermitian : public Error {
 public:
  using Error::Error;
};

class NotPositiveSemidefinite : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

class IntegrationUnstable : public Error {
 public:
  using Error::Error;
};

class RequiresFullRank : public Error {
 public:
  using Error::Error;
};

class AmbiguousClustering : public Error {
 public:
  using Error::Error;
};

class UnphysicalBath : public Error {
 public:
  using Error::Error;
};

class NearDegenerate : public Error {
 public:
  using Error::Error;
};

/// Raised when the perturbation splits a cluster of degenerate Bohr
/// frequencies. Carries the unperturbed frequency and the two first-order
/// shifts that disagree.
class DegeneracyBroken : public Error {
 public:
  DegeneracyBroken(const std::string& what, double omega, double shift_a, double shift_b)
      : Error(what), omega_(omega), shift_a_(shift_a), shift_b_(shift_b) {}

  double omega() const noexcept { return omega_; }
  double shift_a() const noexcept { return shift_a_; }
  double shift_b() const noexcept { return shift_b_; }

 private:
  double omega_;
  double shift_a_;
  double shift_b_;
};

class DegenerateWitness : public Error {
 public:
  using Error::Error;
};

class NotStationary : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qsl
