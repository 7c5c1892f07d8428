#pragma once

#include <stdexcept>
#include <string>

namespace sunvo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// se3_log / so3 log requested at a rotation angle too close to pi.
class SingularityError : public Error
{
public:
  using Error::Error;
};

/// A point lies at or behind the camera plane.
class BehindCameraError : public Error
{
public:
  using Error::Error;
};

/// Disparity too small to triangulate.
class DepthError : public Error
{
public:
  using Error::Error;
};

class ValidationError : public Error
{
public:
  using Error::Error;
};

class ConfigError : public Error
{
public:
  using Error::Error;
};

class RangeError : public Error
{
public:
  using Error::Error;
};

/// Trajectories with mismatched frames or timestamps.
class AlignmentError : public Error
{
public:
  using Error::Error;
};

/// Collinear or otherwise degenerate minimal sample.
class DegenerateSampleError : public Error
{
public:
  using Error::Error;
};

class InfeasibleSceneError : public Error
{
public:
  using Error::Error;
};

class ParseError : public Error
{
public:
  ParseError(const std::string& file, int line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line)
  {
  }

  int line() const noexcept { return line_; }

private:
  int line_;
};

/// Frame-to-frame motion initialization failed between frames k and k+1.
class InitializationError : public Error
{
public:
  InitializationError(int frame, const std::string& what)
      : Error("initialization failed at frame " + std::to_string(frame) + ": " + what),
        frame_(frame)
  {
  }

  int frame() const noexcept { return frame_; }

private:
  int frame_;
};

/// The reduced normal equations of a window could not be solved.
class SolverSingularError : public Error
{
public:
  SolverSingularError(int window, const std::string& what)
      : Error("singular normal equations in window " + std::to_string(window) + ": " + what),
        window_(window)
  {
  }

  int window() const noexcept { return window_; }

private:
  int window_;
};

/// Pipeline-level abort; wraps an initialization or solver failure.
class PipelineAbort : public Error
{
public:
  enum class Stage { frontend, solver };

  PipelineAbort(Stage stage, int index, const std::string& what)
      : Error(what), stage_(stage), index_(index)
  {
  }

  Stage stage() const noexcept { return stage_; }
  int index() const noexcept { return index_; }

private:
  Stage stage_;
  int index_;
};

}  // namespace sunvo
