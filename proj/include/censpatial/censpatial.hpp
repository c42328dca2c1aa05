// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include "censpatial/cli.hpp"
#include "censpatial/eda.hpp"
#include "censpatial/errors.hpp"
#include "censpatial/geometry.hpp"
#include "censpatial/io.hpp"
#include "censpatial/linalg.hpp"
#include "censpatial/mcmc.hpp"
#include "censpatial/metrics.hpp"
#include "censpatial/model.hpp"
#include "censpatial/predict.hpp"
#include "censpatial/rng.hpp"
#include "censpatial/simstudy.hpp"
