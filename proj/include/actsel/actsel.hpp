#pragma once

#include "actsel/calibration.hpp"
#include "actsel/dataset.hpp"
#include "actsel/ensemble.hpp"
#include "actsel/error.hpp"
#include "actsel/evaluation.hpp"
#include "actsel/features.hpp"
#include "actsel/model_io.hpp"
#include "actsel/render.hpp"
#include "actsel/svm.hpp"
