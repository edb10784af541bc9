#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pdgm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Position/velocity pair; the instantaneous configuration of a PDMP.
struct State {
  Vector x;
  Vector v;

  Eigen::Index dim() const { return x.size(); }
};

// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line) : Error(what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

}  // namespace pdgm
