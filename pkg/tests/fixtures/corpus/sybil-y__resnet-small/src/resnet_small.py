from keras.layers import Input, Conv2D, BatchNormalization, Activation, Add, Flatten, Dense
from keras.models import Model


def block(x, filters):
    y = Conv2D(filters, (3, 3), padding="same")(x)
    y = BatchNormalization()(y)
    y = Activation("relu")(y)
    return Add()([x, y])


inputs = Input(shape=(32, 32, 16))
h = block(inputs, 16)
h = Flatten()(h)
outputs = Dense(10, activation="softmax")(h)
model = Model(inputs=inputs, outputs=outputs)
model.compile(optimizer="adam", loss="categorical_crossentropy")
