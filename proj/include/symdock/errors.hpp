/*
 * errors.hpp
 *
 * Exception types shared by all symdock modules.
 */

#ifndef SYMDOCK_ERRORS_HPP_
#define SYMDOCK_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace symdock {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/* a pose outside the grid domain was quantized */
class OutOfDomain : public Error {
public:
  using Error::Error;
};

class EmptyTarget : public Error {
public:
  using Error::Error;
};

/* the fixed point leaves no winning cell outside the target */
class NoWinningRegion : public Error {
public:
  using Error::Error;
};

class EmptyActionList : public Error {
public:
  using Error::Error;
};

class RankDeficientLayout : public Error {
public:
  using Error::Error;
};

class InvalidStart : public Error {
public:
  using Error::Error;
};

/* scenario or configuration document failed validation */
class ConfigError : public Error {
public:
  using Error::Error;
};

class MalformedMessage : public Error {
public:
  MalformedMessage(const std::string& what, std::size_t position)
      : Error(what + " (at byte " + std::to_string(position) + ")"), position_(position) {}
  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

class Timeout : public Error {
public:
  using Error::Error;
};

class ConnectionLost : public Error {
public:
  using Error::Error;
};

} // namespace symdock

#endif /* SYMDOCK_ERRORS_HPP_ */
