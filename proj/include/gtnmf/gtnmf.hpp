#ifndef GTNMF_GTNMF_HPP
#define GTNMF_GTNMF_HPP

#include "gtnmf/dynamics.hpp"
#include "gtnmf/error.hpp"
#include "gtnmf/eval.hpp"
#include "gtnmf/graph.hpp"
#include "gtnmf/matrix_io.hpp"
#include "gtnmf/nmf.hpp"
#include "gtnmf/pipeline.hpp"

#endif
