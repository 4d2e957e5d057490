#pragma once

#include <leakdet/detectability.hpp>
#include <leakdet/enumeration.hpp>
#include <leakdet/error.hpp>
#include <leakdet/estimation.hpp>
#include <leakdet/graph_model.hpp>
#include <leakdet/io.hpp>
#include <leakdet/qp_lasso.hpp>
#include <leakdet/run.hpp>
#include <leakdet/simulator.hpp>
#include <leakdet/time.hpp>
