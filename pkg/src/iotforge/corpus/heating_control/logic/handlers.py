"""Heating control policy for occupied rooms."""

COMFORT_TEMP = 22.0
HEAT_BELOW = 19.0


def heating_control(ctx):
    """Push the heater to the comfort point when someone is in a cold room."""
    avg = ctx.inputs.get("roomAvgTemp")
    occupied = ctx.inputs.get("roomOccupied")
    cold = avg is not None and avg < HEAT_BELOW
    if bool(occupied) and cold and not ctx.state.get("heating"):
        ctx.state["heating"] = True
        ctx.output("targetTemp", COMFORT_TEMP)
        ctx.command("setTemp")
    elif not (bool(occupied) and cold):
        ctx.state["heating"] = False


HANDLERS = {"heatingControlLogic": heating_control}
