"""Fire detection decision logic."""

FIRE_TEMP_THRESHOLD = 50.0


def fire_state(ctx):
    """A room burns when its average temperature tops the threshold while
    smoke is present."""
    avg = ctx.inputs.get("avgTemp")
    smoke = ctx.inputs.get("smokeDetected")
    on_fire = avg is not None and avg > FIRE_TEMP_THRESHOLD and bool(smoke)
    ctx.output("fireState", on_fire)


HANDLERS = {"fireStateLogic": fire_state}
