"""Learned one-step predictors and sensor shape optimization for linear PDEs."""

__version__ = "0.1.0"

from .grid import Grid, ICKind, InitialCondition, build_grid, eval_initial_condition
from .pde import (ModelKind, PdeModel, StabilityError, Trajectory, simulate, stability_margin,
                  step_operator)
from .reconstruction import (ReconstructionSpec, SensorWeights, active_set, reconstruct,
                             reconstruct_many)
from .predictor import (AffinePredictor, Conv1, Dataset, Dense2, TrainingConfig,
                        effective_matrix, input_jacobian, load_model, make_dataset, predict,
                        save_model, train)
from .cost import (CostParams, CostReport, approximate_gradient, evaluate_cost,
                   surrogate_fd_check)
from .optimizer import (OptimizationTrace, OptimizerConfig, coverage_report, optimize,
                        project_box)
from .experiments import (ExperimentConfig, ExperimentResult, builtin_experiment,
                          export_plot_data, l1_error_over_time, load_config, run_experiment,
                          save_config)
