"""Retrodirective power beam loop: channels, loop engine, control, scenarios."""

from ._core import (
    ArrayGeometry,
    ChannelSnapshot,
    ControllerParams,
    Damping,
    DesignResult,
    EigenAnalysis,
    Error,
    LinearTracePoint,
    LoopParams,
    Obstruction,
    PlantParams,
    PoleAnalysis,
    RegressionResult,
    Vec3,
    __version__,
    channel_from_json,
    channel_to_json,
    decompose_input,
    design_gains,
    efficiency,
    efficiency_from_weights,
    eig_analysis,
    find_marginal_lg,
    load_channel,
    marginal_regression,
    overshoot_step_disturbance,
    plant_response,
    poles,
    power_recursion_oracle,
    ramp_error,
    random_passive_channel,
    run_comparison_json,
    run_scenario_json,
    save_channel,
    scenario_template,
    settling_time,
    simulate_closed_loop_linear,
    startup_peak,
    startup_response,
    synth_channel,
    zero_input_oracle,
)

__all__ = [name for name in dir() if not name.startswith("_")]
