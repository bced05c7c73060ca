from .adam import AdamState, adam_step
from .layers import (conv1d_forward, cross_entropy, dense_forward, lstm_forward,
                     maxpool1d, softmax)
from .models import (CnnSpec, LstmSpec, TrainedNet, backprop, init_params,
                     loss_and_grads, predict, spec_from_dict, train)
