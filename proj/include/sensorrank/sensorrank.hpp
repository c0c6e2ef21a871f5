#pragma once

#include "sensorrank/error.hpp"
#include "sensorrank/schema.hpp"
#include "sensorrank/registry.hpp"
#include "sensorrank/query.hpp"
#include "sensorrank/ranking.hpp"
#include "sensorrank/cphf.hpp"
#include "sensorrank/pipeline.hpp"
#include "sensorrank/json_io.hpp"
#include "sensorrank/bench.hpp"
