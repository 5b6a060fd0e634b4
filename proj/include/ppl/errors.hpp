#pragma once

#include <stdexcept>
#include <string>

namespace ppl {

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class invalid_config_error : public error {
 public:
  using error::error;
};

class invalid_input_error : public error {
 public:
  using error::error;
};

class index_error : public error {
 public:
  using error::error;
};

class ordering_error : public error {
 public:
  using error::error;
};

class insufficient_data_error : public error {
 public:
  using error::error;
};

class numeric_error : public error {
 public:
  using error::error;
};

class divergence_error : public error {
 public:
  divergence_error(const std::string& msg, long step) : error(msg), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

class coupling_error : public error {
 public:
  using error::error;
};

class no_convergence_error : public error {
 public:
  no_convergence_error(const std::string& msg, double residual)
      : error(msg), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class domain_error : public error {
 public:
  using error::error;
};

class unsupported_error : public error {
 public:
  using error::error;
};

class io_error : public error {
 public:
  using error::error;
};

class empty_input_error : public error {
 public:
  using error::error;
};

}  // namespace ppl
