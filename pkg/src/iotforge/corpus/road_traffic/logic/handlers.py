"""Ramp metering policy."""

FREE_FLOW_SPEED = 60.0
QUEUE_LIMIT = 8.0
OPEN_RATE = 20.0
METERED_RATE = 6.0


def ramp_control(ctx):
    """Meter the ramp while the sector is congested, open it otherwise.

    Emits only on rate changes so the signal is not re-commanded on every
    measurement round.
    """
    speed = ctx.inputs.get("avgSpeed")
    queue = ctx.inputs.get("avgQueueLength")
    if speed is None:
        return
    congested = speed < FREE_FLOW_SPEED and (queue or 0.0) > QUEUE_LIMIT
    rate = METERED_RATE if congested else OPEN_RATE
    if ctx.state.get("rate") != rate:
        ctx.state["rate"] = rate
        ctx.output("rampRate", rate)
        ctx.command("setRate")


HANDLERS = {"rampControlLogic": ramp_control}
